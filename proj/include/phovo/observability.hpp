#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "phovo/rng.hpp"

namespace phovo {

/// Disjoint sets with path compression and union by size.
class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1), components_(n) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t x) {
        std::size_t root = x;
        while (parent_[root] != root)
            root = parent_[root];
        while (parent_[x] != root) {
            const std::size_t next = parent_[x];
            parent_[x] = root;
            x = next;
        }
        return root;
    }

    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b)
            return false;
        if (size_[a] < size_[b])
            std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        --components_;
        return true;
    }

    std::size_t component_count() const { return components_; }
    std::size_t component_size(std::size_t x) { return size_[find(x)]; }
    std::size_t node_count() const { return parent_.size(); }

    /// Deterministic component labels: each node is labelled with the smallest
    /// node id contained in its component.
    std::vector<std::size_t> smallest_member_labels() {
        std::vector<std::size_t> label(parent_.size(), SIZE_MAX);
        for (std::size_t i = 0; i < parent_.size(); ++i) {
            const std::size_t root = find(i);
            label[root] = std::min(label[root], i);
        }
        std::vector<std::size_t> out(parent_.size());
        for (std::size_t i = 0; i < parent_.size(); ++i)
            out[i] = label[find(i)];
        return out;
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
    std::size_t components_;
};

/// One node per optimization variable (plane cells on the left, vignette
/// pixels on the right) and one edge per residual term.
struct BipartiteResidualGraph {
    std::size_t left_count = 0;
    std::size_t right_count = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges; // (left, right)

    std::size_t node_count() const { return left_count + right_count; }

    void add_edge(std::uint32_t left, std::uint32_t right) {
        if (left >= left_count || right >= right_count)
            throw std::out_of_range("BipartiteResidualGraph: edge endpoint out of range");
        edges.emplace_back(left, right);
    }
};

struct ConnectivityReport {
    std::size_t component_count = 0;
    std::size_t largest_component_size = 0;
    double largest_component_fraction = 0.0;

    bool connected() const { return component_count == 1; }
};

/// Exact connected-component analysis of the residual graph.
inline ConnectivityReport connectivity(const BipartiteResidualGraph& graph) {
    UnionFind uf(graph.node_count());
    for (const auto& [left, right] : graph.edges)
        uf.unite(left, graph.left_count + right);
    ConnectivityReport report;
    report.component_count = uf.component_count();
    std::size_t largest = 0;
    for (std::size_t i = 0; i < graph.node_count(); ++i)
        largest = std::max(largest, uf.component_size(i));
    report.largest_component_size = largest;
    report.largest_component_fraction =
        graph.node_count() ? static_cast<double>(largest) / graph.node_count() : 0.0;
    return report;
}

/// Asymptotic probability that a random bipartite graph with |A| = |B| = n and
/// n(ln n + c) edges is connected: P = exp(-2 exp(-c)).
inline double connectivity_probability(double c) {
    return std::exp(-2.0 * std::exp(-c));
}

namespace detail {

inline unsigned worker_count() {
    if (const char* env = std::getenv("PHOVO_WORKERS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n >= 1)
            return static_cast<unsigned>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

inline bool random_bipartite_connected(std::size_t n, std::size_t edge_count, Rng rng) {
    UnionFind uf(2 * n);
    for (std::size_t e = 0; e < edge_count; ++e) {
        const std::size_t left = rng.integer(n);
        const std::size_t right = rng.integer(n);
        uf.unite(left, n + right);
    }
    return uf.component_count() == 1;
}

} // namespace detail

/// Empirical connected fraction over random bipartite multigraphs with
/// |A| = |B| = n and floor(n (ln n + c)) edges sampled uniformly with
/// replacement. Deterministic given the seed; trials run in parallel with
/// per-trial derived seeds (worker count via PHOVO_WORKERS).
inline double monte_carlo_connectivity(std::size_t n, double c, int trials, std::uint64_t seed) {
    if (n < 2)
        throw std::invalid_argument("monte_carlo_connectivity: n must be >= 2");
    if (trials < 1)
        throw std::invalid_argument("monte_carlo_connectivity: trials must be >= 1");
    const auto edge_count =
        static_cast<std::size_t>(std::floor(n * (std::log(static_cast<double>(n)) + c)));
    const Rng base(seed);
    std::vector<std::uint8_t> connected(static_cast<std::size_t>(trials), 0);

    const unsigned workers =
        std::min<unsigned>(detail::worker_count(), static_cast<unsigned>(trials));
    if (workers <= 1) {
        for (int t = 0; t < trials; ++t)
            connected[t] = detail::random_bipartite_connected(
                n, edge_count, base.derive(static_cast<std::uint64_t>(t)));
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                for (int t = static_cast<int>(w); t < trials; t += static_cast<int>(workers))
                    connected[t] = detail::random_bipartite_connected(
                        n, edge_count, base.derive(static_cast<std::uint64_t>(t)));
            });
        }
        for (auto& th : pool)
            th.join();
    }

    const auto hits = std::count(connected.begin(), connected.end(), std::uint8_t{1});
    return static_cast<double>(hits) / trials;
}

} // namespace phovo
