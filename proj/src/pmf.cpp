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
#include "taskpower/pmf.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "text_scan.hpp"

namespace taskpower {

std::string_view to_string(Unit unit) {
    switch (unit) {
        case Unit::Cycles: return "cycles";
        case Unit::Microwatts: return "microwatts";
        case Unit::MicrowattCycles: return "microwatt-cycles";
        case Unit::Dimensionless: return "dimensionless";
    }
    return "?";
}

bool same_value(double a, double b) {
    double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
    return std::fabs(a - b) <= kValueTolerance * scale;
}

namespace {

void require_same_unit(const Pmf& a, const Pmf& b, const char* op) {
    if (a.unit() != b.unit())
        throw std::invalid_argument(std::string(op) + ": unit mismatch (" + std::string(to_string(a.unit())) +
                                    " vs " + std::string(to_string(b.unit())) + ")");
}

// Cumulative mass up to and including index i.
std::vector<double> prefix_mass(const Pmf& p) {
    std::vector<double> out;
    out.reserve(p.size());
    double acc = 0.0;
    for (const auto& pt : p.points()) {
        acc += pt.prob;
        out.push_back(acc);
    }
    return out;
}

// P(X <= x) using precomputed prefix sums.
double cdf_with(const Pmf& p, const std::vector<double>& prefix, double x) {
    auto pts = p.points();
    auto it = std::partition_point(pts.begin(), pts.end(),
                                   [x](const PmfPoint& pt) { return pt.value <= x || same_value(pt.value, x); });
    if (it == pts.begin()) return 0.0;
    if (it == pts.end()) return 1.0;  // exact, so survival products vanish
    double mass = prefix[static_cast<std::size_t>(it - pts.begin()) - 1];
    return std::min(mass, 1.0);
}

// Sorted union of both supports, merged under same_value().
std::vector<double> support_union(const Pmf& a, const Pmf& b) {
    std::vector<double> values;
    values.reserve(a.size() + b.size());
    for (const auto& pt : a.points()) values.push_back(pt.value);
    for (const auto& pt : b.points()) values.push_back(pt.value);
    std::sort(values.begin(), values.end());
    std::vector<double> out;
    for (double v : values)
        if (out.empty() || !same_value(out.back(), v)) out.push_back(v);
    return out;
}

}  // namespace

Pmf Pmf::make(std::vector<PmfPoint> points, Unit unit) {
    double total = 0.0;
    for (const auto& pt : points) {
        if (!std::isfinite(pt.value) || pt.value < 0.0)
            throw std::invalid_argument("pmf: support value must be finite and nonnegative");
        if (!std::isfinite(pt.prob) || pt.prob < 0.0)
            throw std::invalid_argument("pmf: probability must be finite and nonnegative");
        total += pt.prob;
    }
    std::erase_if(points, [](const PmfPoint& pt) { return pt.prob == 0.0; });
    if (points.empty() || !(total > 0.0)) throw std::invalid_argument("pmf: all probabilities are zero");

    std::sort(points.begin(), points.end(),
              [](const PmfPoint& x, const PmfPoint& y) { return x.value < y.value; });

    // Mass already at 1 up to rounding is kept as is so text round-trips are exact.
    const double norm = std::fabs(total - 1.0) <= 1e-14 ? 1.0 : total;
    std::vector<PmfPoint> merged;
    merged.reserve(points.size());
    std::size_t i = 0;
    while (i < points.size()) {
        double anchor = points[i].value;
        double mass = 0.0;
        double moment = 0.0;
        std::size_t j = i;
        for (; j < points.size() && same_value(anchor, points[j].value); ++j) {
            mass += points[j].prob;
            moment += points[j].prob * points[j].value;
        }
        double value = (j - i == 1) ? anchor : moment / mass;
        merged.push_back({value, mass / norm});
        i = j;
    }
    return Pmf(std::move(merged), unit);
}

Pmf Pmf::delta(double value, Unit unit) { return make({{value, 1.0}}, unit); }

Pmf Pmf::with_unit(Unit unit) const { return Pmf(points_, unit); }

Transmittance::Transmittance(double path_prob, Pmf dist) : path_prob(path_prob), dist(std::move(dist)) {
    if (!(path_prob > 0.0 && path_prob <= 1.0))
        throw std::invalid_argument("transmittance: path probability must lie in (0, 1]");
}

double expectation(const Pmf& p) {
    double sum = 0.0;
    for (const auto& pt : p.points()) sum += pt.prob * pt.value;
    return sum;
}

double std_dev(const Pmf& p) {
    double mean = expectation(p);
    double var = 0.0;
    for (const auto& pt : p.points()) {
        double d = pt.value - mean;
        var += pt.prob * d * d;
    }
    return std::sqrt(std::max(var, 0.0));
}

double most_probable(const Pmf& p) {
    // Exact ties are rare after normalization; treat anything within 1e-12 as a tie.
    double best = 0.0;
    for (const auto& pt : p.points()) best = std::max(best, pt.prob);
    for (const auto& pt : p.points())
        if (pt.prob >= best - 1e-12) return pt.value;
    return p.min_value();
}

double cdf_at(const Pmf& p, double x) { return cdf_with(p, prefix_mass(p), x); }

Pmf convolve_sum(const Pmf& a, const Pmf& b, std::size_t cap) {
    require_same_unit(a, b, "convolve_sum");
    std::vector<PmfPoint> points;
    points.reserve(a.size() * b.size());
    for (const auto& x : a.points())
        for (const auto& y : b.points()) points.push_back({x.value + y.value, x.prob * y.prob});
    return rebin(Pmf::make(std::move(points), a.unit()), cap);
}

Pmf max_pmf(const Pmf& a, const Pmf& b) {
    require_same_unit(a, b, "max_pmf");
    auto pa = prefix_mass(a);
    auto pb = prefix_mass(b);
    std::vector<PmfPoint> points;
    double prev = 0.0;
    for (double v : support_union(a, b)) {
        double f = cdf_with(a, pa, v) * cdf_with(b, pb, v);
        points.push_back({v, std::max(f - prev, 0.0)});
        prev = f;
    }
    return Pmf::make(std::move(points), a.unit());
}

Pmf min_pmf(const Pmf& a, const Pmf& b) {
    require_same_unit(a, b, "min_pmf");
    auto pa = prefix_mass(a);
    auto pb = prefix_mass(b);
    std::vector<PmfPoint> points;
    double prev_survival = 1.0;
    for (double v : support_union(a, b)) {
        double s = (1.0 - cdf_with(a, pa, v)) * (1.0 - cdf_with(b, pb, v));
        points.push_back({v, std::max(prev_survival - s, 0.0)});
        prev_survival = s;
    }
    return Pmf::make(std::move(points), a.unit());
}

Pmf mixture(std::span<const std::pair<double, Pmf>> branches) {
    if (branches.empty()) throw std::invalid_argument("mixture: no branches");
    Unit unit = branches.front().second.unit();
    double total = 0.0;
    std::vector<PmfPoint> points;
    for (const auto& [w, dist] : branches) {
        if (!std::isfinite(w) || w < 0.0) throw std::invalid_argument("mixture: negative branch probability");
        if (dist.unit() != unit) throw std::invalid_argument("mixture: unit mismatch");
        total += w;
        for (const auto& pt : dist.points()) points.push_back({pt.value, w * pt.prob});
    }
    if (std::fabs(total - 1.0) > 1e-9)
        throw std::invalid_argument("mixture: branch probabilities sum to " + format_probability(total));
    return Pmf::make(std::move(points), unit);
}

Pmf scale(const Pmf& p, double factor) {
    if (!std::isfinite(factor) || !(factor > 0.0)) throw std::invalid_argument("scale: factor must be positive");
    std::vector<PmfPoint> points(p.points().begin(), p.points().end());
    for (auto& pt : points) pt.value *= factor;
    return Pmf::make(std::move(points), p.unit());
}

Pmf rebin(const Pmf& p, std::size_t max_points) {
    if (max_points < 2) throw std::invalid_argument("rebin: max_points must be at least 2");
    if (p.size() <= max_points) return p;
    double lo = p.min_value();
    double width = (p.max_value() - lo) / static_cast<double>(max_points);
    std::vector<double> mass(max_points, 0.0);
    std::vector<double> moment(max_points, 0.0);
    for (const auto& pt : p.points()) {
        auto bin = static_cast<std::size_t>((pt.value - lo) / width);
        bin = std::min(bin, max_points - 1);
        mass[bin] += pt.prob;
        moment[bin] += pt.prob * pt.value;
    }
    std::vector<PmfPoint> points;
    for (std::size_t i = 0; i < max_points; ++i)
        if (mass[i] > 0.0) points.push_back({moment[i] / mass[i], mass[i]});
    return Pmf::make(std::move(points), p.unit());
}

bool approx_equal(const Pmf& a, const Pmf& b, double tol) {
    if (a.unit() != b.unit() || a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& x = a.points()[i];
        const auto& y = b.points()[i];
        double scale = std::max({1.0, std::fabs(x.value), std::fabs(y.value)});
        if (std::fabs(x.value - y.value) > tol * scale) return false;
        if (std::fabs(x.prob - y.prob) > tol) return false;
    }
    return true;
}

double max_point_deviation(const Pmf& a, const Pmf& b) {
    auto mass_at = [](const Pmf& p, double v) {
        for (const auto& pt : p.points())
            if (same_value(pt.value, v)) return pt.prob;
        return 0.0;
    };
    double worst = 0.0;
    for (double v : support_union(a, b)) worst = std::max(worst, std::fabs(mass_at(a, v) - mass_at(b, v)));
    return worst;
}

std::string format_number(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) return "nan";
    return std::string(buf, ptr);
}

std::string format_probability(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

std::string format_pmf(const Pmf& p) {
    std::string out = "{";
    bool first = true;
    for (const auto& pt : p.points()) {
        if (!first) out += ", ";
        first = false;
        out += format_number(pt.value);
        out += ':';
        out += format_number(pt.prob);
    }
    out += '}';
    return out;
}

Pmf parse_pmf(std::string_view text, Unit unit) {
    detail::Lexer lex(text);
    Pmf p = lex.parse_pmf(unit);
    const auto& rest = lex.peek();
    if (rest.kind != detail::Token::Kind::End) lex.fail(rest, "trailing text after distribution");
    return p;
}

std::string pmf_to_csv(const Pmf& p) {
    std::string out = "value,probability\n";
    for (const auto& pt : p.points()) {
        out += format_number(pt.value);
        out += ',';
        out += format_number(pt.prob);
        out += '\n';
    }
    return out;
}

}  // namespace taskpower
