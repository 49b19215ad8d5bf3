#include "critpop/occupation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "critpop/error.hpp"

namespace critpop {

namespace {

Error occupation_error(ErrorCode code, const char* op, const std::string& msg) {
  return Error(code, "occupation", op, msg);
}

Error non_monotone(const char* op, double last, double t) {
  return occupation_error(ErrorCode::NonMonotoneTime, op,
                          "time " + std::to_string(t) + " does not exceed " +
                              std::to_string(last));
}

} // namespace

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  // exact zero for constant input; the two-pass formula leaves rounding residue
  if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// RunningAverage

void RunningAverage::observe(double t, double left, double right) {
  if (!started_) {
    started_ = true;
    last_t_ = t;
    last_f_ = right;
    return;
  }
  if (!(t > last_t_)) throw non_monotone("observe", last_t_, t);
  const double h = t - last_t_;
  integral_ += 0.5 * h * (last_f_ + left);
  elapsed_ += h;
  last_t_ = t;
  last_f_ = right;
}

double RunningAverage::average() const {
  if (elapsed_ <= 0.0) return last_f_;
  return integral_ / elapsed_;
}

void RunningAverage::merge(const RunningAverage& other) {
  integral_ += other.integral_;
  elapsed_ += other.elapsed_;
  if (other.started_ && (!started_ || other.last_t_ > last_t_)) {
    last_t_ = other.last_t_;
    last_f_ = other.last_f_;
  }
  started_ = started_ || other.started_;
}

// BatchMeans

BatchMeans::BatchMeans(double t_start, double t_end, int batches)
    : t_start_(t_start), t_end_(t_end) {
  if (!(t_end > t_start) || batches < 1)
    throw occupation_error(ErrorCode::InvalidArgument, "BatchMeans",
                           "empty window or non-positive batch count");
  length_ = (t_end - t_start) / batches;
  integrals_.assign(static_cast<std::size_t>(batches), 0.0);
}

BatchMeans BatchMeans::from_means(std::vector<double> means) {
  BatchMeans acc;
  acc.t_start_ = 0.0;
  acc.t_end_ = static_cast<double>(means.size());
  acc.length_ = 1.0;
  acc.integrals_ = std::move(means);
  acc.started_ = true;
  acc.last_t_ = acc.t_end_;
  return acc;
}

void BatchMeans::accumulate(double a, double b, double fa, double fb) {
  // [a, b] already clipped to the window; f linear from fa to fb.
  const double span = b - a;
  const std::size_t last = integrals_.size() - 1;
  auto idx = static_cast<std::size_t>(std::max(0.0, std::floor((a - t_start_) / length_)));
  idx = std::min(idx, last);
  double lo = a;
  while (true) {
    const double hi =
        idx == last ? b : std::min(b, t_start_ + static_cast<double>(idx + 1) * length_);
    if (hi > lo) {
      const double f_lo = fa + (fb - fa) * (lo - a) / span;
      const double f_hi = fa + (fb - fa) * (hi - a) / span;
      integrals_[idx] += 0.5 * (hi - lo) * (f_lo + f_hi);
      lo = hi;
    }
    if (lo >= b || idx == last) break;
    ++idx;
  }
}

void BatchMeans::observe(double t, double left, double right) {
  if (!started_) {
    started_ = true;
    last_t_ = t;
    last_f_ = right;
    return;
  }
  if (!(t > last_t_)) throw non_monotone("observe", last_t_, t);
  const double a = std::max(last_t_, t_start_);
  const double b = std::min(t, t_end_);
  if (b > a) {
    const double span = t - last_t_;
    const double fa = last_f_ + (left - last_f_) * (a - last_t_) / span;
    const double fb = last_f_ + (left - last_f_) * (b - last_t_) / span;
    accumulate(a, b, fa, fb);
  }
  last_t_ = t;
  last_f_ = right;
}

double BatchMeans::covered() const {
  if (!started_) return 0.0;
  return std::clamp(last_t_, t_start_, t_end_) - t_start_;
}

std::vector<double> BatchMeans::means() const {
  std::vector<double> m(integrals_.size());
  std::transform(integrals_.begin(), integrals_.end(), m.begin(),
                 [this](double v) { return v / length_; });
  return m;
}

double BatchMeans::mean() const {
  const double c = covered();
  if (c <= 0.0) return last_f_;
  return std::accumulate(integrals_.begin(), integrals_.end(), 0.0) / c;
}

double BatchMeans::standard_error() const {
  const auto m = means();
  if (m.size() < 2) return 0.0;
  return sample_std(m) / std::sqrt(static_cast<double>(m.size()));
}

void BatchMeans::merge(const BatchMeans& other) {
  // Pool as equal-weight batch means; rescale integrals onto this length.
  for (double v : other.integrals_) integrals_.push_back(v / other.length_ * length_);
  const double total = static_cast<double>(integrals_.size()) * length_;
  t_end_ = t_start_ + total;
  last_t_ = t_end_;
  started_ = true;
}

ConfidenceInterval batch_ci(const BatchMeans& acc, double confidence) {
  if (acc.batches() < BatchMeans::kMinBatches)
    throw occupation_error(ErrorCode::TooFewBatches, "batch_ci",
                           std::to_string(acc.batches()) + " batches, need >= " +
                               std::to_string(BatchMeans::kMinBatches));
  if (!(confidence > 0.0 && confidence < 1.0))
    throw occupation_error(ErrorCode::InvalidArgument, "batch_ci", "confidence must be in (0,1)");
  const boost::math::normal_distribution<double> normal;
  const double z = boost::math::quantile(normal, 0.5 + confidence / 2.0);
  const auto m = acc.means();
  const double mean = std::accumulate(m.begin(), m.end(), 0.0) / static_cast<double>(m.size());
  return {mean, z * acc.standard_error()};
}

// OccupationHistogram

OccupationHistogram::OccupationHistogram(Eigen::VectorXd lower, Eigen::VectorXd upper,
                                         std::vector<int> bins)
    : lower_(std::move(lower)), upper_(std::move(upper)), bins_(std::move(bins)) {
  if (lower_.size() != upper_.size() || static_cast<std::size_t>(lower_.size()) != bins_.size())
    throw occupation_error(ErrorCode::InvalidArgument, "OccupationHistogram",
                           "box and bin dimensions differ");
  std::size_t cells = 1;
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    if (bins_[i] < 1 || !(upper_(static_cast<Eigen::Index>(i)) > lower_(static_cast<Eigen::Index>(i))))
      throw occupation_error(ErrorCode::InvalidArgument, "OccupationHistogram",
                             "degenerate axis " + std::to_string(i));
    cells *= static_cast<std::size_t>(bins_[i]);
  }
  time_.assign(cells, 0.0);
}

std::size_t OccupationHistogram::cell_index(const Eigen::Ref<const Eigen::VectorXd>& p) const {
  std::size_t index = 0;
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    if (p(e) < lower_(e) || p(e) > upper_(e)) return time_.size();
    auto b = static_cast<int>(std::floor((p(e) - lower_(e)) / (upper_(e) - lower_(e)) * bins_[i]));
    b = std::min(b, bins_[i] - 1);
    index = index * static_cast<std::size_t>(bins_[i]) + static_cast<std::size_t>(b);
  }
  return index;
}

void OccupationHistogram::observe(double t, const Eigen::Ref<const Eigen::VectorXd>& point) {
  if (started_) {
    if (!(t > last_t_)) throw non_monotone("OccupationHistogram::observe", last_t_, t);
    const double h = t - last_t_;
    const std::size_t idx = cell_index(last_point_);
    if (idx == time_.size())
      outside_ += h;
    else
      time_[idx] += h;
    total_ += h;
  }
  started_ = true;
  last_t_ = t;
  last_point_ = point;
}

std::vector<double> OccupationHistogram::weights() const {
  std::vector<double> w(time_.size(), 0.0);
  if (total_ <= 0.0) return w;
  std::transform(time_.begin(), time_.end(), w.begin(), [this](double v) { return v / total_; });
  return w;
}

double OccupationHistogram::outside_mass() const { return total_ > 0.0 ? outside_ / total_ : 0.0; }

// LogGrowth

LogGrowth::LogGrowth(double t_start, double t_end, int batches)
    : t_start_(t_start), t_end_(t_end), length_((t_end - t_start) / batches) {
  if (!(t_end > t_start) || batches < 1)
    throw occupation_error(ErrorCode::InvalidArgument, "log_growth",
                           "empty window or non-positive batch count");
  marks_.reserve(static_cast<std::size_t>(batches) + 1);
}

void LogGrowth::observe(double t, double log_rho) {
  if (!std::isfinite(log_rho))
    throw occupation_error(ErrorCode::NonPositiveValue, "log_growth",
                           "log(rho) is not finite at t = " + std::to_string(t));
  if (!started_) {
    started_ = true;
    last_t_ = t;
    last_l_ = log_rho;
    if (t == t_start_) marks_.push_back(log_rho);
    return;
  }
  if (!(t > last_t_)) throw non_monotone("log_growth", last_t_, t);
  const std::size_t total = static_cast<std::size_t>(std::llround((t_end_ - t_start_) / length_)) + 1;
  while (marks_.size() < total) {
    const double mark = (marks_.size() + 1 == total)
                            ? t_end_
                            : t_start_ + static_cast<double>(marks_.size()) * length_;
    if (mark > t || mark < last_t_) break;
    marks_.push_back(last_l_ + (log_rho - last_l_) * (mark - last_t_) / (t - last_t_));
  }
  last_t_ = t;
  last_l_ = log_rho;
}

GrowthRateEstimate LogGrowth::estimate() const {
  GrowthRateEstimate est;
  if (marks_.size() < 2) return est;
  const double span = length_ * static_cast<double>(marks_.size() - 1);
  est.rate = (marks_.back() - marks_.front()) / span;
  for (std::size_t b = 0; b + 1 < marks_.size(); ++b)
    est.batch_slopes.push_back((marks_[b + 1] - marks_[b]) / length_);
  est.standard_error =
      sample_std(est.batch_slopes) / std::sqrt(static_cast<double>(est.batch_slopes.size()));
  return est;
}

GrowthRateEstimate log_growth(const std::vector<double>& t, const std::vector<double>& rho,
                              double burn_in, double horizon, int batches) {
  if (t.size() != rho.size())
    throw occupation_error(ErrorCode::InvalidArgument, "log_growth", "length mismatch");
  LogGrowth acc(burn_in, horizon, batches);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(rho[i] > 0.0))
      throw occupation_error(ErrorCode::NonPositiveValue, "log_growth",
                             "rho <= 0 at index " + std::to_string(i));
    acc.observe(t[i], std::log(rho[i]));
  }
  return acc.estimate();
}

} // namespace critpop
