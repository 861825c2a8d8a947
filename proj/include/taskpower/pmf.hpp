// Copyright 2026 The taskpower Authors.
//
//    Licensed under the Apache License, Version 2.0 (the "License");
//    you may not use this file except in compliance with the License.
//    You may obtain a copy of the License at
//
//         http://www.apache.org/licenses/LICENSE-2.0
//
//    Unless required by applicable law or agreed to in writing, software
//    distributed under the License is distributed on an "AS IS" BASIS,
//    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//    See the License for the specific language governing permissions and
//    limitations under the License.
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace taskpower {

enum class Unit { Cycles, Microwatts, MicrowattCycles, Dimensionless };

std::string_view to_string(Unit unit);

/// Default upper bound on the support size kept by composition steps.
inline constexpr std::size_t kDefaultSupportCap = 1024;

/// Two support values closer than this (relative, floor 1.0) are the same point.
inline constexpr double kValueTolerance = 1e-9;

bool same_value(double a, double b);

struct PmfPoint {
    double value;
    double prob;

    bool operator==(const PmfPoint&) const = default;
};

/// Discrete probability mass function over a nonnegative quantity.
///
/// Values are strictly increasing, every probability is positive and the
/// probabilities sum to one. Instances are immutable once built.
class Pmf {
  public:
    /// Normalizing constructor. Drops zero-probability points, sorts, merges
    /// values that compare equal under same_value() and rescales to unit mass.
    /// Throws std::invalid_argument on a negative probability, a negative or
    /// non-finite value, or when every probability is zero.
    static Pmf make(std::vector<PmfPoint> points, Unit unit);

    static Pmf delta(double value, Unit unit);

    /// Point mass at zero in the given unit.
    Pmf() : Pmf(delta(0.0, Unit::Dimensionless)) {}

    std::span<const PmfPoint> points() const noexcept { return points_; }
    Unit unit() const noexcept { return unit_; }
    std::size_t size() const noexcept { return points_.size(); }
    double min_value() const noexcept { return points_.front().value; }
    double max_value() const noexcept { return points_.back().value; }

    /// Same points with a different unit tag.
    Pmf with_unit(Unit unit) const;

    bool operator==(const Pmf&) const = default;

  private:
    Pmf(std::vector<PmfPoint> points, Unit unit) : points_(std::move(points)), unit_(unit) {}

    std::vector<PmfPoint> points_;
    Unit unit_;
};

/// Transmittance p * z^X kept as the pair (path probability, distribution of X).
struct Transmittance {
    double path_prob;
    Pmf dist;

    Transmittance(double path_prob, Pmf dist);
};

double expectation(const Pmf& p);
double std_dev(const Pmf& p);

/// Support value carrying the largest probability; ties go to the smallest value.
double most_probable(const Pmf& p);

/// P(X <= x). Support values within kValueTolerance of x count as <= x.
double cdf_at(const Pmf& p, double x);

/// Distribution of X + Y for independent X ~ a, Y ~ b, rebinned to `cap` points.
Pmf convolve_sum(const Pmf& a, const Pmf& b, std::size_t cap = kDefaultSupportCap);

/// Distribution of max(X, Y) for independent X ~ a, Y ~ b.
Pmf max_pmf(const Pmf& a, const Pmf& b);

/// Distribution of min(X, Y) for independent X ~ a, Y ~ b.
Pmf min_pmf(const Pmf& a, const Pmf& b);

/// Weighted mixture. Weights must sum to one within 1e-9 and all units agree.
Pmf mixture(std::span<const std::pair<double, Pmf>> branches);

/// Every value multiplied by `factor` (> 0), probabilities untouched.
Pmf scale(const Pmf& p, double factor);

/// Merges adjacent points into at most `max_points` equal-width bins, each
/// represented by its probability-weighted mean. Identity when the support
/// already fits. Total mass and expectation are preserved.
Pmf rebin(const Pmf& p, std::size_t max_points);

/// Pointwise comparison: same support size, values equal under same_value()
/// scaled by `tol`, probabilities within `tol`.
bool approx_equal(const Pmf& a, const Pmf& b, double tol = 1e-9);

/// Largest absolute probability difference over the union of supports.
double max_point_deviation(const Pmf& a, const Pmf& b);

// Text form `{ v1:p1, v2:p2 }`.
/// Values and probabilities in shortest round-trip form.
/// Values in shortest round-trip form, probabilities with 9 significant digits.
std::string format_pmf(const Pmf& p);

/// Parses a PMF literal and returns it normalized with the given unit.
/// Throws ParseError (column relative to the literal) on malformed text.
Pmf parse_pmf(std::string_view text, Unit unit);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double value);

/// `value` with 9 significant digits.
std::string format_probability(double value);

/// CSV table with header `value,probability`, one row per support point.
std::string pmf_to_csv(const Pmf& p);

}  // namespace taskpower
