#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "conic_lens/core.hpp"

namespace conic {

using Rhs = std::function<void(double t, const VecX& y, VecX& dy)>;

struct OdeOptions {
  double rtol = 1e-12;
  double atol = 1e-13;
  VecX atol_vec;  // per-component override (empty: use atol)
  double h_init = 0.0;
  double h_min = 1e-14;
  double h_max = std::numeric_limits<double>::infinity();
  long max_steps = 4'000'000;
};

// One accepted step with Hairer's continuous extension (order 4).
struct DenseStep {
  double t0 = 0, h = 0;
  VecX r1, r2, r3, r4, r5;
  VecX eval(double t) const;
  double t1() const { return t0 + h; }
  bool contains(double t) const;
};

// Dormand-Prince 5(4) with adaptive step size and dense output.
class Dopri5 {
 public:
  Dopri5(Rhs f, OdeOptions opt);

  void reset(double t0, const VecX& y0, double direction);
  // Advances by one accepted step without passing t_end.
  const DenseStep& step(double t_end);

  double t() const { return t_; }
  const VecX& y() const { return y_; }
  const VecX& dy() const { return k1_; }
  long accepted() const { return n_acc_; }
  long rejected() const { return n_rej_; }

  // Single uncontrolled step from (t0, y0) of size h.
  VecX exact_step(double t0, const VecX& y0, double h) const;
  void eval_rhs(double t, const VecX& y, VecX& dy) const { f_(t, y, dy); }

  // Extra acceptance predicate (y0, y1, h); returning false shrinks the step.
  std::function<bool(const VecX&, const VecX&, double)> accept_hook;

 private:
  double initial_step();
  Rhs f_;
  OdeOptions opt_;
  double t_ = 0, h_ = 0, dir_ = 1;
  VecX y_, k1_;
  DenseStep last_;
  long n_acc_ = 0, n_rej_ = 0;
};

struct Event {
  std::function<double(double t, const VecX& y)> g;
  // derivative of g along the flow, given y and dy/dt
  std::function<double(double t, const VecX& y, const VecX& dy)> dg;
  int direction = -1;  // -1: g decreasing through 0, +1 increasing, 0 both
  bool terminal = true;
};

struct EventHit {
  int index;
  double t;
  VecX y;
};

enum class SolveStatus { Finished, Event, Aborted, StepUnderflow, TooManySteps, NonFinite };
std::string to_string(SolveStatus s);

struct Solution {
  std::vector<DenseStep> steps;
  std::vector<EventHit> hits;
  std::vector<std::pair<double, VecX>> stops;  // exact states at requested stop times
  SolveStatus status = SolveStatus::Finished;
  double t_end = 0;
  VecX y_end;
  long accepted = 0, rejected = 0;

  // Dense-output evaluation; t must lie in the integrated range.
  VecX at(double t) const;
  const DenseStep& segment(double t) const;
};

struct SolveRequest {
  double t0 = 0;
  VecX y0;
  double t_end = 0;
  std::vector<Event> events;
  std::vector<double> stops;
  // Called after every accepted step; return false to abort.
  std::function<bool(double t, const VecX& y)> keep_going;
  bool keep_dense = true;
  std::function<bool(const VecX&, const VecX&, double)> accept_hook;
};

Solution solve(const Rhs& f, const SolveRequest& req, const OdeOptions& opt);

// Refines the state at an event by exact re-stepping from a step start.
EventHit refine_event(const Dopri5& rk, const Event& ev, int index, const DenseStep& seg, double t_guess);

}  // namespace conic
