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
#include "taskpower/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "taskpower/error.hpp"

namespace taskpower {

namespace {

struct Composite {
    Pmf time;
    std::optional<Pmf> power;
};

// Joint (time, power) law. Only needed for race arms whose time and power are
// correlated through an inner branch or race.
struct JointPoint {
    double time;
    double power;
    double prob;
};
using Joint = std::vector<JointPoint>;

bool correlated(const FlowNode& n) {
    if (n.is<Branch>() || n.is<Race>()) return true;
    if (const auto* s = std::get_if<Sequence>(&n.node))
        return std::any_of(s->children.begin(), s->children.end(), correlated);
    if (const auto* a = std::get_if<AndGroup>(&n.node))
        return std::any_of(a->children.begin(), a->children.end(), correlated);
    return false;
}

[[noreturn]] void unflattened() { throw InputError("analysis requires a flattened tree (found a subflow reference)"); }

Joint normalize_joint(Joint pts, std::size_t cap) {
    std::sort(pts.begin(), pts.end(), [](const JointPoint& a, const JointPoint& b) {
        return a.time < b.time || (a.time == b.time && a.power < b.power);
    });
    Joint merged;
    for (const auto& pt : pts) {
        if (pt.prob <= 0.0) continue;
        bool folded = false;
        // Points sharing a time are contiguous; scan back over that run only.
        for (auto it = merged.rbegin(); it != merged.rend() && same_value(it->time, pt.time); ++it) {
            if (same_value(it->power, pt.power)) {
                it->prob += pt.prob;
                folded = true;
                break;
            }
        }
        if (!folded) merged.push_back(pt);
    }
    if (merged.size() <= cap) return merged;

    // Grid rebinning; each cell keeps its probability-weighted centroid.
    auto side = std::max<std::size_t>(2, static_cast<std::size_t>(std::sqrt(static_cast<double>(cap))));
    double t_lo = merged.front().time, t_hi = t_lo, p_lo = merged.front().power, p_hi = p_lo;
    for (const auto& pt : merged) {
        t_lo = std::min(t_lo, pt.time);
        t_hi = std::max(t_hi, pt.time);
        p_lo = std::min(p_lo, pt.power);
        p_hi = std::max(p_hi, pt.power);
    }
    auto cell = [side](double v, double lo, double hi) {
        if (hi <= lo) return std::size_t{0};
        auto i = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(side));
        return std::min(i, side - 1);
    };
    std::vector<JointPoint> acc(side * side, JointPoint{0.0, 0.0, 0.0});
    for (const auto& pt : merged) {
        auto& c = acc[cell(pt.time, t_lo, t_hi) * side + cell(pt.power, p_lo, p_hi)];
        c.time += pt.prob * pt.time;
        c.power += pt.prob * pt.power;
        c.prob += pt.prob;
    }
    Joint out;
    for (const auto& c : acc)
        if (c.prob > 0.0) out.push_back({c.time / c.prob, c.power / c.prob, c.prob});
    return out;
}

// Probability that the arm finishing at `t` wins the race against `others`,
// with an n-way tie counted as a 1/n share.
double win_share(double t, const std::vector<const Pmf*>& others) {
    std::vector<double> ties{1.0};  // ties[c]: exactly c others tie at t, the rest finish later
    for (const Pmf* o : others) {
        double at = 0.0, later = 0.0;
        for (const auto& pt : o->points()) {
            if (same_value(pt.value, t)) at += pt.prob;
            else if (pt.value > t) later += pt.prob;
        }
        std::vector<double> next(ties.size() + 1, 0.0);
        for (std::size_t c = 0; c < ties.size(); ++c) {
            next[c] += ties[c] * later;
            next[c + 1] += ties[c] * at;
        }
        ties = std::move(next);
    }
    double share = 0.0;
    for (std::size_t c = 0; c < ties.size(); ++c) share += ties[c] / static_cast<double>(c + 1);
    return share;
}

std::vector<const Pmf*> all_but(const std::vector<Composite>& arms, std::size_t k) {
    std::vector<const Pmf*> out;
    for (std::size_t j = 0; j < arms.size(); ++j)
        if (j != k) out.push_back(&arms[j].time);
    return out;
}

class Composer {
  public:
    explicit Composer(const AnalysisOptions& opts) : cap_(opts.support_cap) {
        if (cap_ < 2) throw InputError("support cap must be at least 2");
    }

    Composite compose(const FlowNode& n, bool want_power) {
        if (const auto* t = std::get_if<TaskNode>(&n.node)) return {t->time, t->power};
        if (const auto* s = std::get_if<Sequence>(&n.node)) return sequence(s->children, want_power);
        if (const auto* a = std::get_if<AndGroup>(&n.node)) return and_group(a->children, want_power);
        if (const auto* b = std::get_if<Branch>(&n.node)) return branch(*b, want_power);
        if (const auto* r = std::get_if<Race>(&n.node)) return race(r->children, want_power);
        unflattened();
    }

    Joint joint(const FlowNode& n) {
        if (!correlated(n)) {
            Composite c = compose(n, true);
            Joint out;
            for (const auto& t : c.time.points())
                for (const auto& p : c.power->points()) out.push_back({t.value, p.value, t.prob * p.prob});
            return out;
        }
        if (const auto* s = std::get_if<Sequence>(&n.node)) {
            auto weights = duration_weights(s->children);
            Joint acc{{0.0, 0.0, 1.0}};
            for (std::size_t i = 0; i < s->children.size(); ++i) {
                Joint child = joint(s->children[i]);
                Joint next;
                for (const auto& x : acc)
                    for (const auto& y : child)
                        next.push_back({x.time + y.time, x.power + weights[i] * y.power, x.prob * y.prob});
                acc = normalize_joint(std::move(next), cap_);
            }
            return acc;
        }
        if (const auto* a = std::get_if<AndGroup>(&n.node)) {
            Joint acc = joint(a->children.front());
            for (std::size_t i = 1; i < a->children.size(); ++i) {
                Joint child = joint(a->children[i]);
                Joint next;
                for (const auto& x : acc)
                    for (const auto& y : child)
                        next.push_back({std::max(x.time, y.time), x.power + y.power, x.prob * y.prob});
                acc = normalize_joint(std::move(next), cap_);
            }
            return acc;
        }
        if (const auto* b = std::get_if<Branch>(&n.node)) {
            Joint out;
            for (std::size_t i = 0; i < b->arms.size(); ++i) {
                if (b->probs[i] == 0.0) continue;
                for (auto pt : joint(b->arms[i])) {
                    pt.prob *= b->probs[i];
                    out.push_back(pt);
                }
            }
            return normalize_joint(std::move(out), cap_);
        }
        const auto& r = n.as<Race>();
        std::vector<Composite> arms;
        for (const auto& c : r.children) arms.push_back(compose(c, false));
        Joint out;
        for (std::size_t k = 0; k < r.children.size(); ++k) {
            auto others = all_but(arms, k);
            for (auto pt : joint(r.children[k])) {
                pt.prob *= win_share(pt.time, others);
                out.push_back(pt);
            }
        }
        return normalize_joint(std::move(out), cap_);
    }

  private:
    std::vector<double> duration_weights(const std::vector<FlowNode>& children) {
        std::vector<double> means;
        double total = 0.0;
        for (const auto& c : children) {
            means.push_back(expectation(compose(c, false).time));
            total += means.back();
        }
        if (!(total > 0.0)) throw InputError("sequence has zero total expected duration; power weighting undefined");
        for (double& m : means) m /= total;
        return means;
    }

    Composite sequence(const std::vector<FlowNode>& children, bool want_power) {
        std::vector<Composite> parts;
        for (const auto& c : children) parts.push_back(compose(c, want_power));
        Composite out{parts.front().time, std::nullopt};
        for (std::size_t i = 1; i < parts.size(); ++i) out.time = convolve_sum(out.time, parts[i].time, cap_);
        if (!want_power) return out;

        double total = 0.0;
        for (const auto& p : parts) total += expectation(p.time);
        if (!(total > 0.0)) throw InputError("sequence has zero total expected duration; power weighting undefined");
        Pmf power = Pmf::delta(0.0, Unit::Microwatts);
        for (const auto& p : parts) {
            double w = expectation(p.time) / total;
            if (w > 0.0) power = convolve_sum(power, scale(*p.power, w), cap_);
        }
        out.power = std::move(power);
        return out;
    }

    Composite and_group(const std::vector<FlowNode>& children, bool want_power) {
        Composite out = compose(children.front(), want_power);
        for (std::size_t i = 1; i < children.size(); ++i) {
            Composite c = compose(children[i], want_power);
            out.time = rebin(max_pmf(out.time, c.time), cap_);
            if (want_power) out.power = convolve_sum(*out.power, *c.power, cap_);
        }
        return out;
    }

    Composite branch(const Branch& b, bool want_power) {
        std::vector<std::pair<double, Pmf>> times, powers;
        for (std::size_t i = 0; i < b.arms.size(); ++i) {
            Composite c = compose(b.arms[i], want_power);
            times.emplace_back(b.probs[i], std::move(c.time));
            if (want_power) powers.emplace_back(b.probs[i], std::move(*c.power));
        }
        Composite out{rebin(mixture(times), cap_), std::nullopt};
        if (want_power) out.power = rebin(mixture(powers), cap_);
        return out;
    }

    Composite race(const std::vector<FlowNode>& children, bool want_power) {
        std::vector<Composite> arms;
        for (const auto& c : children) arms.push_back(compose(c, want_power));
        Composite out{arms.front().time, std::nullopt};
        for (std::size_t i = 1; i < arms.size(); ++i) out.time = rebin(min_pmf(out.time, arms[i].time), cap_);
        if (!want_power) return out;

        std::vector<PmfPoint> points;
        for (std::size_t k = 0; k < arms.size(); ++k) {
            auto others = all_but(arms, k);
            if (!correlated(children[k])) {
                double wins = 0.0;
                for (const auto& t : arms[k].time.points()) wins += t.prob * win_share(t.value, others);
                for (const auto& p : arms[k].power->points()) points.push_back({p.value, wins * p.prob});
            } else {
                for (const auto& pt : joint(children[k]))
                    points.push_back({pt.power, pt.prob * win_share(pt.time, others)});
            }
        }
        out.power = rebin(Pmf::make(std::move(points), Unit::Microwatts), cap_);
        return out;
    }

    std::size_t cap_;
};

}  // namespace

Pmf time_pmf(const FlowNode& root, const AnalysisOptions& opts) { return Composer(opts).compose(root, false).time; }

Pmf power_pmf(const FlowNode& root, const AnalysisOptions& opts) { return *Composer(opts).compose(root, true).power; }

AnalysisReport analyze_tree(const FlowNode& root, std::optional<double> deadline, const AnalysisOptions& opts) {
    Composite c = Composer(opts).compose(root, true);
    AnalysisReport r;
    r.time = std::move(c.time);
    r.power = std::move(*c.power);
    r.mean_time = expectation(r.time);
    r.mean_power = expectation(r.power);
    r.std_power = std_dev(r.power);
    r.most_probable_power = most_probable(r.power);
    r.deadline = deadline;
    if (deadline) r.confidence_at_deadline = cdf_at(r.time, *deadline);
    return r;
}

AnalysisReport analyze(const FlowGraph& g, const AnalysisOptions& opts) {
    return analyze_tree(flatten(g), g.deadline, opts);
}

std::vector<double> branch_probs_from_profile(std::span<const std::uint64_t> counts) {
    double total = 0.0;
    for (auto c : counts) total += static_cast<double>(c);
    if (!(total > 0.0)) throw std::invalid_argument("branch profile: all execution counts are zero");
    std::vector<double> out;
    out.reserve(counts.size());
    for (auto c : counts) out.push_back(static_cast<double>(c) / total);
    return out;
}

std::string format_report(const AnalysisReport& r) {
    std::string out;
    auto line = [&out](const char* key, const std::string& value) {
        out += key;
        out += '=';
        out += value;
        out += '\n';
    };
    line("mean_time", format_number(r.mean_time));
    line("mean_power", format_number(r.mean_power));
    line("std_power", format_number(r.std_power));
    line("most_probable_power", format_number(r.most_probable_power));
    line("time_support", std::to_string(r.time.size()));
    line("power_support", std::to_string(r.power.size()));
    if (r.deadline) line("deadline", format_number(*r.deadline));
    if (r.confidence_at_deadline) line("confidence_at_deadline", format_number(*r.confidence_at_deadline));
    return out;
}

}  // namespace taskpower
