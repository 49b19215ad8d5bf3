#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace critpop {

// Trapezoidal running time-average (1/t) * int f(X_s) ds from the first
// observation onward.
class RunningAverage {
public:
  void observe(double t, double value) { observe(t, value, value); }
  // `left` closes the segment ending at t, `right` opens the next one; they
  // differ when the observable jumps at t (e.g. an environment switch).
  void observe(double t, double left, double right);

  bool started() const noexcept { return started_; }
  double integral() const noexcept { return integral_; }
  double elapsed() const noexcept { return elapsed_; }
  double average() const;
  double last_time() const noexcept { return last_t_; }

  // Concatenation of two disjoint windows.
  void merge(const RunningAverage& other);

private:
  bool started_ = false;
  double integral_ = 0.0;
  double elapsed_ = 0.0;
  double last_t_ = 0.0;
  double last_f_ = 0.0;
};

// Time-average over the window [t_start, t_end] split into equal-length
// contiguous batches; the standard error is sd(batch means) / sqrt(B).
class BatchMeans {
public:
  static constexpr int kDefaultBatches = 50;
  static constexpr int kMinBatches = 20;

  BatchMeans(double t_start, double t_end, int batches = kDefaultBatches);
  // Already-computed batch means (e.g. from replicates).
  static BatchMeans from_means(std::vector<double> means);

  void observe(double t, double value) { observe(t, value, value); }
  void observe(double t, double left, double right);

  int batches() const noexcept { return static_cast<int>(integrals_.size()); }
  double batch_length() const noexcept { return length_; }
  double window_start() const noexcept { return t_start_; }
  double window_end() const noexcept { return t_end_; }
  double covered() const;
  std::vector<double> means() const;
  double mean() const;
  double standard_error() const;

  // Pools the batches of both accumulators.
  void merge(const BatchMeans& other);

private:
  BatchMeans() = default;
  void accumulate(double a, double b, double fa, double fb);

  double t_start_ = 0.0;
  double t_end_ = 0.0;
  double length_ = 1.0;
  std::vector<double> integrals_;
  bool started_ = false;
  double last_t_ = 0.0;
  double last_f_ = 0.0;
};

struct ConfidenceInterval {
  double mean = 0.0;
  double half_width = 0.0;
};

// mean +- z * SE with z the two-sided normal quantile; needs >= 20 batches.
ConfidenceInterval batch_ci(const BatchMeans& acc, double confidence = 0.95);

// Fraction of time spent in each cell of a regular grid over a box.
class OccupationHistogram {
public:
  OccupationHistogram(Eigen::VectorXd lower, Eigen::VectorXd upper, std::vector<int> bins);

  void observe(double t, const Eigen::Ref<const Eigen::VectorXd>& point);

  // weights over in-box cells, normalized by total time (cells + outside)
  std::vector<double> weights() const;
  double outside_mass() const;
  double total_time() const noexcept { return total_; }
  std::size_t cell_index(const Eigen::Ref<const Eigen::VectorXd>& point) const;

private:
  Eigen::VectorXd lower_, upper_;
  std::vector<int> bins_;
  std::vector<double> time_;
  double outside_ = 0.0;
  double total_ = 0.0;
  bool started_ = false;
  double last_t_ = 0.0;
  Eigen::VectorXd last_point_;
};

struct GrowthRateEstimate {
  double rate = 0.0;
  double standard_error = 0.0;
  std::vector<double> batch_slopes;
};

// Slope of log(rho) over [t_start, t_end]; batch slopes give the SE. Fed with
// log(rho) directly, so it never has to form rho near extinction.
class LogGrowth {
public:
  LogGrowth(double t_start, double t_end, int batches = BatchMeans::kDefaultBatches);
  void observe(double t, double log_rho);
  GrowthRateEstimate estimate() const;

private:
  double t_start_, t_end_, length_;
  std::vector<double> marks_; // log rho at t_start + b * length_
  bool started_ = false;
  double last_t_ = 0.0;
  double last_l_ = 0.0;
};

// Offline version over a sampled path of positive rho.
GrowthRateEstimate log_growth(const std::vector<double>& t, const std::vector<double>& rho,
                              double burn_in, double horizon,
                              int batches = BatchMeans::kDefaultBatches);

double sample_std(const std::vector<double>& v);

} // namespace critpop
