#include "sher/session.hpp"

#include <cmath>

#include "sher/errors.hpp"

namespace sher {

LiveSession::LiveSession(SimConfig cfg)
    : base_(std::move(cfg)),
      mode_(base_.trial.mode),
      scale_(base_.teleop.scale),
      seed_(base_.trial.seed) {
  base_.validate();
  staleness_ticks_ = static_cast<std::uint64_t>(
      std::max(1LL, std::llround(base_.staleness_timeout / base_.trial.dt)));
  max_trial_ticks_ =
      static_cast<std::uint64_t>(std::llround(base_.trial.max_duration / base_.trial.dt));
  rebuild_idle();
}

SimConfig LiveSession::trial_config() const {
  SimConfig c = base_;
  c.trial.mode = mode_;
  c.trial.seed = seed_;
  c.teleop.scale = scale_;
  return c;
}

void LiveSession::rebuild_idle() {
  running_ = false;
  sim_ = std::make_unique<Simulation>(trial_config());
}

void LiveSession::apply(const Command& cmd) {
  log_.push_back({tick_, cmd});
  std::visit(
      [this](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, MasterVelocityCmd>) {
          velocity_ << c.v, c.omega;
          velocity_tick_ = tick_;
        } else if constexpr (std::is_same_v<T, ClutchCmd>) {
          clutch_ = c.engaged;
        } else if constexpr (std::is_same_v<T, SetModeCmd>) {
          mode_ = c.mode;
          sim_->set_mode(c.mode);
        } else if constexpr (std::is_same_v<T, SetScaleCmd>) {
          scale_ = c.scale;
          sim_->set_scale(c.scale);
        } else if constexpr (std::is_same_v<T, ResetCmd>) {
          seed_ = c.seed;
          clutch_ = false;
          velocity_tick_.reset();
          velocity_.setZero();
          rebuild_idle();
        } else {
          SimConfig tc = trial_config();
          tc.trial.color_order = c.color_order;
          tc.trial.color_order = resolve_color_order(tc.trial);
          sim_ = std::make_unique<Simulation>(tc);
          trial_config_json_ = config_to_json(tc);
          running_ = true;
          if (max_trial_ticks_ == 0) {
            finish_trial();
          }
        }
      },
      cmd);
}

OperatorCommand LiveSession::operator_command() const {
  OperatorCommand out;
  Vec6 v = Vec6::Zero();
  if (velocity_tick_ && tick_ - *velocity_tick_ < staleness_ticks_) {
    v = velocity_;
  }
  if (is_teleop(mode_)) {
    out.master_velocity = v;
    out.clutch = clutch_;
  } else {
    const Vec6& k = base_.admittance.diagonal;
    for (Eigen::Index i = 0; i < 6; ++i) {
      out.hand_wrench(i) = k(i) > 0.0 ? v(i) / k(i) : 0.0;
    }
  }
  return out;
}

void LiveSession::tick() {
  if (running_) {
    try {
      sim_->step(operator_command());
    } catch (const Error& e) {
      TrialRecord rec;
      rec.mode = sim_->config().trial.mode;
      rec.seed = seed_;
      rec.order = sim_->order();
      rec.rows = sim_->take_rows();
      rec.summary = summarize_rows(rec.rows, base_.adaptive.T_s);
      rec.aborted = true;
      rec.diagnostic = e.what();
      rec.config_json = trial_config_json_;
      finished_.push_back(std::move(rec));
      ++tick_;
      rebuild_idle();
      return;
    }
    ++tick_;
    if (sim_->complete() || sim_->tick() >= max_trial_ticks_) {
      finish_trial();
    }
    return;
  }
  ++tick_;
}

void LiveSession::finish_trial() {
  TrialRecord rec;
  rec.mode = sim_->config().trial.mode;
  rec.seed = seed_;
  rec.order = sim_->order();
  rec.rows = sim_->take_rows();
  rec.summary = summarize_rows(rec.rows, base_.adaptive.T_s);
  rec.config_json = trial_config_json_;
  finished_.push_back(std::move(rec));
  running_ = false;
}

std::vector<TrialRecord> LiveSession::take_finished() {
  std::vector<TrialRecord> out;
  out.swap(finished_);
  return out;
}

StateSnapshot LiveSession::snapshot() const {
  const Simulation& s = *sim_;
  StateSnapshot snap;
  snap.tick = tick_;
  snap.t = time();
  snap.trial_t = s.time();
  snap.trial_running = running_;
  snap.tip = s.tip();
  snap.q = s.q();
  snap.F_sx = s.sensed().F_sx;
  snap.F_sy = s.sensed().F_sy;
  snap.F_s_norm = s.sensed().norm();
  snap.f_dx = s.adaptive().axes[0].f_d;
  snap.f_dy = s.adaptive().axes[1].f_d;
  snap.alpha_x = s.adaptive().axes[0].alpha;
  snap.alpha_y = s.adaptive().axes[1].alpha;
  snap.active_x = s.adaptive().axes[0].active;
  snap.active_y = s.adaptive().axes[1].active;
  snap.mode = mode_;
  snap.insertion_depth = s.contact().insertion_depth;
  snap.complete = s.complete();
  if (!s.complete()) {
    snap.color = std::string(1, color_letter(s.order()[s.progress().color_index]));
    snap.waypoint = s.progress().waypoint_index;
  }
  snap.clutch = clutch_;
  snap.scale = scale_;
  return snap;
}

std::vector<TrialRecord> run_command_timeline(const SimConfig& cfg,
                                              const std::vector<TimedCommand>& timeline,
                                              std::uint64_t max_ticks) {
  LiveSession session(cfg);
  std::vector<TrialRecord> out;
  std::size_t next = 0;
  while (session.ticks() < max_ticks) {
    while (next < timeline.size() && timeline[next].tick <= session.ticks()) {
      session.apply(timeline[next].cmd);
      ++next;
    }
    if (next >= timeline.size() && !session.trial_running()) {
      break;
    }
    session.tick();
    for (TrialRecord& r : session.take_finished()) {
      out.push_back(std::move(r));
    }
  }
  for (TrialRecord& r : session.take_finished()) {
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace sher
