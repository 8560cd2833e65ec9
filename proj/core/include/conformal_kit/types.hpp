#ifndef CONFORMAL_KIT_TYPES_HPP
#define CONFORMAL_KIT_TYPES_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace conformal {

/** Base class for all errors thrown by this library. */
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/** A caller passed an out-of-domain value (negative tolerance, alpha outside [0,1], ...). */
class argument_error : public error {
 public:
  using error::error;
};

/** User-facing configuration (CLI flags, config files, datasets) is malformed. */
class config_error : public error {
 public:
  using error::error;
};

/** An algorithm precondition was violated at entry and detected at runtime. */
class contract_error : public error {
 public:
  using error::error;
};

/** The requested operation is not defined for this predictor/score kind. */
class unsupported_error : public error {
 public:
  using error::error;
};

// The extended real line is modelled by IEEE doubles: +-infinity are ordinary
// values, and comparisons follow IEEE order, so y <= +inf holds for every real
// y and y <= -inf holds for none.  NaN is excluded by construction everywhere.
using extended_real = double;

inline constexpr double pos_inf = std::numeric_limits<double>::infinity();
inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

/** One labelled point: response plus feature vector (the latter may be empty). */
struct Observation {
  double y = 0.0;
  std::vector<double> x;
};

/** Exact bitwise equality of two feature vectors (no tolerance). */
inline bool features_equal(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

/**
 * Ordered collection of observations with a fixed feature dimension.
 *
 * Instances are value types; leave-one-out sets and candidate-augmented sets
 * are materialised as copies (training sets in this library are small).
 * Immutable once built as far as concurrent readers are concerned.
 */
class DataSet {
 public:
  DataSet() = default;
  explicit DataSet(std::size_t dim) : dim_(dim) {}

  void add(Observation obs) {
    if (obs.x.size() != dim_) {
      throw argument_error("DataSet::add: feature dimension mismatch (expected " +
                           std::to_string(dim_) + ", got " + std::to_string(obs.x.size()) + ")");
    }
    obs_.push_back(std::move(obs));
  }

  std::size_t size() const { return obs_.size(); }
  std::size_t dim() const { return dim_; }
  bool empty() const { return obs_.empty(); }

  const Observation& operator[](std::size_t i) const { return obs_[i]; }

  auto begin() const { return obs_.begin(); }
  auto end() const { return obs_.end(); }

  /** Copy with observation i removed (leave-one-out set). */
  DataSet without(std::size_t i) const {
    if (i >= obs_.size()) throw argument_error("DataSet::without: index out of range");
    DataSet out(dim_);
    out.obs_.reserve(obs_.size() - 1);
    for (std::size_t j = 0; j < obs_.size(); ++j) {
      if (j != i) out.obs_.push_back(obs_[j]);
    }
    return out;
  }

  /** Copy with one observation appended (candidate-augmented set). */
  DataSet augmented(Observation obs) const {
    DataSet out = *this;
    out.add(std::move(obs));
    return out;
  }

  std::vector<double> responses() const {
    std::vector<double> out;
    out.reserve(obs_.size());
    for (const auto& o : obs_) out.push_back(o.y);
    return out;
  }

  // Mutation hooks for hot loops that sweep a candidate over a fixed augmented
  // set; the set must be private scratch owned by the calling loop.
  void set_response(std::size_t i, double y) { obs_.at(i).y = y; }

  void set_observation(std::size_t i, double y, std::span<const double> x) {
    if (x.size() != dim_) {
      throw argument_error("DataSet::set_observation: feature dimension mismatch");
    }
    Observation& obs = obs_.at(i);
    obs.y = y;
    obs.x.assign(x.begin(), x.end());
  }

 private:
  std::size_t dim_ = 0;
  std::vector<Observation> obs_;
};

/** Seed for one reproducible random stream; distinct (seed, stream) pairs are independent. */
struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/**
 * Uniform evaluation grid with finite bounds and at least two points.
 * Point j is lo + j*step(), j = 0..points-1.
 */
struct GridSpec {
  double lo = -1.0;
  double hi = 1.0;
  std::size_t points = 4001;

  void validate() const {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
      throw argument_error("GridSpec: bounds must be finite with lo < hi");
    }
    if (points < 2) throw argument_error("GridSpec: need at least two grid points");
  }

  double step() const { return (hi - lo) / static_cast<double>(points - 1); }
  double at(std::size_t j) const { return lo + static_cast<double>(j) * step(); }
};

}  // namespace conformal

#endif  // CONFORMAL_KIT_TYPES_HPP
