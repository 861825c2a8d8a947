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
#include <algorithm>
#include <map>
#include <memory>
#include <random>
#include <thread>

#include "taskpower/analysis.hpp"
#include "taskpower/error.hpp"
#include "taskpower/oracle.hpp"

namespace taskpower::oracle {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct Table {
    std::vector<double> values;
    std::vector<double> cumulative;

    explicit Table(const Pmf& p) {
        double acc = 0.0;
        for (const auto& pt : p.points()) {
            values.push_back(pt.value);
            acc += pt.prob;
            cumulative.push_back(acc);
        }
        cumulative.back() = 1.0;
    }
    Table(std::vector<double> v, const std::vector<double>& probs) : values(std::move(v)) {
        double acc = 0.0;
        for (double p : probs) {
            acc += p;
            cumulative.push_back(acc);
        }
        cumulative.back() = 1.0;
    }

    std::size_t draw_index(double u) const {
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
    }
    double draw(double u) const { return values[draw_index(u)]; }
};

// Pre-digested tree so each trial only walks tables.
struct Sampler {
    enum class Kind { Task, Seq, And, Branch, Race } kind = Kind::Task;
    std::unique_ptr<Table> time, power, arm;
    std::vector<double> weights;  // sequence power weights
    std::vector<Sampler> children;

    std::pair<double, double> sample(std::mt19937_64& rng) const {
        switch (kind) {
            case Kind::Task: {
                double t = time->draw(uniform(rng));
                return {t, power->draw(uniform(rng))};
            }
            case Kind::Branch:
                return children[arm->draw_index(uniform(rng))].sample(rng);
            case Kind::Seq: {
                double t = 0.0, p = 0.0;
                for (std::size_t i = 0; i < children.size(); ++i) {
                    auto [ct, cp] = children[i].sample(rng);
                    t += ct;
                    p += weights[i] * cp;
                }
                return {t, p};
            }
            case Kind::And: {
                double t = 0.0, p = 0.0;
                for (const auto& c : children) {
                    auto [ct, cp] = c.sample(rng);
                    t = std::max(t, ct);
                    p += cp;
                }
                return {t, p};
            }
            case Kind::Race: {
                std::vector<std::pair<double, double>> draws;
                for (const auto& c : children) draws.push_back(c.sample(rng));
                double t = draws.front().first;
                for (const auto& d : draws) t = std::min(t, d.first);
                std::vector<double> winners;
                for (const auto& d : draws)
                    if (same_value(d.first, t)) winners.push_back(d.second);
                std::size_t k = winners.size() == 1
                                    ? 0
                                    : std::min(winners.size() - 1,
                                               static_cast<std::size_t>(uniform(rng) * static_cast<double>(winners.size())));
                return {t, winners[k]};
            }
        }
        return {0.0, 0.0};
    }
};

double expected_time(const FlowNode& n) {
    if (outcome_count(n) <= kDefaultOutcomeCap) return expectation(enumerate_exact(n).time);
    return expectation(time_pmf(n));
}

Sampler build(const FlowNode& n) {
    Sampler s;
    if (const auto* t = std::get_if<TaskNode>(&n.node)) {
        s.kind = Sampler::Kind::Task;
        s.time = std::make_unique<Table>(t->time);
        s.power = std::make_unique<Table>(t->power);
        return s;
    }
    if (const auto* b = std::get_if<Branch>(&n.node)) {
        s.kind = Sampler::Kind::Branch;
        std::vector<double> idx(b->arms.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<double>(i);
        s.arm = std::make_unique<Table>(std::move(idx), b->probs);
        for (const auto& a : b->arms) s.children.push_back(build(a));
        return s;
    }
    const std::vector<FlowNode>* children = nullptr;
    if (const auto* q = std::get_if<Sequence>(&n.node)) {
        s.kind = Sampler::Kind::Seq;
        children = &q->children;
        double total = 0.0;
        for (const auto& c : q->children) {
            s.weights.push_back(expected_time(c));
            total += s.weights.back();
        }
        if (!(total > 0.0)) throw InputError("sequence has zero total expected duration");
        for (double& w : s.weights) w /= total;
    } else if (const auto* a = std::get_if<AndGroup>(&n.node)) {
        s.kind = Sampler::Kind::And;
        children = &a->children;
    } else if (const auto* r = std::get_if<Race>(&n.node)) {
        s.kind = Sampler::Kind::Race;
        children = &r->children;
    } else {
        throw InputError("monte carlo requires a flattened tree");
    }
    for (const auto& c : *children) s.children.push_back(build(c));
    return s;
}

using Counts = std::map<double, std::uint64_t>;

Pmf to_pmf(const Counts& c, std::uint64_t trials, Unit unit) {
    std::vector<PmfPoint> pts;
    for (const auto& [v, k] : c) pts.push_back({v, static_cast<double>(k) / static_cast<double>(trials)});
    return Pmf::make(std::move(pts), unit);
}

}  // namespace

SimResult monte_carlo(const FlowNode& root, std::uint64_t trials, std::uint64_t seed) {
    if (trials == 0) throw InputError("trial count must be positive");
    const Sampler sampler = build(root);

    // Trials are grouped in fixed blocks; block b draws from its own stream, so
    // the outcome does not depend on how blocks are spread over workers.
    constexpr std::uint64_t kBlock = 1024;
    const std::uint64_t blocks = (trials + kBlock - 1) / kBlock;
    std::size_t workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
    workers = static_cast<std::size_t>(std::min<std::uint64_t>(workers, blocks));
    std::vector<Counts> times(workers), powers(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::uint64_t b = w; b < blocks; b += workers) {
                std::mt19937_64 rng(splitmix64(seed + b));
                std::uint64_t end = std::min(trials, (b + 1) * kBlock);
                for (std::uint64_t i = b * kBlock; i < end; ++i) {
                    auto [t, p] = sampler.sample(rng);
                    ++times[w][t];
                    ++powers[w][p];
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    // Count merging is order independent, so the result ignores the worker count.
    for (std::size_t w = 1; w < workers; ++w) {
        for (const auto& [v, k] : times[w]) times[0][v] += k;
        for (const auto& [v, k] : powers[w]) powers[0][v] += k;
    }
    return {to_pmf(times[0], trials, Unit::Cycles), to_pmf(powers[0], trials, Unit::Microwatts), trials, seed};
}

SimResult monte_carlo(const FlowGraph& g, std::uint64_t trials, std::uint64_t seed) {
    return monte_carlo(flatten(g), trials, seed);
}

}  // namespace taskpower::oracle
