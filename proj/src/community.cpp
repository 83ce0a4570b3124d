#include "commdiar/community.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <queue>
#include <random>

namespace commdiar {

namespace {

constexpr double kMinGain = 1e-12;

// Working graph for the multi-level loop. Aggregate nodes carry self-loops
// (intra weight counted once); degree counts a self-loop twice.
struct MultiGraph {
    int n = 0;
    std::vector<std::vector<std::pair<int, double>>> adj;
    std::vector<double> self_loop;
    std::vector<double> degree;
    double m = 0.0;

    static MultiGraph from_sparse(const SparseGraph& g) {
        MultiGraph mg;
        mg.n = g.num_nodes();
        mg.adj.resize(static_cast<std::size_t>(mg.n));
        mg.self_loop.assign(static_cast<std::size_t>(mg.n), 0.0);
        mg.degree.resize(static_cast<std::size_t>(mg.n));
        for (int i = 0; i < mg.n; ++i) {
            auto nbrs = g.neighbors(i);
            auto ws = g.weights(i);
            auto& row = mg.adj[static_cast<std::size_t>(i)];
            row.reserve(nbrs.size());
            for (std::size_t t = 0; t < nbrs.size(); ++t) row.emplace_back(nbrs[t], ws[t]);
            mg.degree[static_cast<std::size_t>(i)] = g.degree(i);
        }
        mg.m = g.total_edge_weight();
        return mg;
    }
};

int compact_labels(std::vector<int>& labels) {
    std::vector<int> remap(labels.size(), -1);
    int next = 0;
    for (int& l : labels) {
        if (remap[static_cast<std::size_t>(l)] < 0) remap[static_cast<std::size_t>(l)] = next++;
        l = remap[static_cast<std::size_t>(l)];
    }
    return next;
}

double modularity_on_multigraph(const MultiGraph& g, const std::vector<int>& comm, double gamma) {
    int max_label = 0;
    for (int c : comm) max_label = std::max(max_label, c);
    std::vector<double> intra(static_cast<std::size_t>(max_label) + 1, 0.0);
    std::vector<double> deg(static_cast<std::size_t>(max_label) + 1, 0.0);
    for (int i = 0; i < g.n; ++i) {
        const int c = comm[static_cast<std::size_t>(i)];
        deg[static_cast<std::size_t>(c)] += g.degree[static_cast<std::size_t>(i)];
        intra[static_cast<std::size_t>(c)] += g.self_loop[static_cast<std::size_t>(i)];
        for (const auto& [j, w] : g.adj[static_cast<std::size_t>(i)]) {
            if (j > i && comm[static_cast<std::size_t>(j)] == c) intra[static_cast<std::size_t>(c)] += w;
        }
    }
    double q = 0.0;
    for (std::size_t c = 0; c < intra.size(); ++c) {
        const double dc = deg[c] / (2.0 * g.m);
        q += intra[c] / g.m - gamma * dc * dc;
    }
    return q;
}

// Scratch for accumulating a node's edge weight into each touched community.
struct NeighborAccumulator {
    std::vector<double> acc;
    std::vector<std::uint32_t> seen;
    std::vector<int> touched;
    std::uint32_t epoch = 0;

    void init(std::size_t size) {
        acc.assign(size, 0.0);
        seen.assign(size, 0);
        touched.clear();
        epoch = 0;
    }
    void begin() {
        if (++epoch == 0) {
            std::fill(seen.begin(), seen.end(), 0);
            epoch = 1;
        }
        touched.clear();
    }
    void add(int c, double w) {
        const auto idx = static_cast<std::size_t>(c);
        if (seen[idx] != epoch) {
            seen[idx] = epoch;
            acc[idx] = w;
            touched.push_back(c);
        } else {
            acc[idx] += w;
        }
    }
    double get(int c) const {
        const auto idx = static_cast<std::size_t>(c);
        return seen[idx] == epoch ? acc[idx] : 0.0;
    }
};

struct CommunityState {
    std::vector<int> comm;
    std::vector<double> comm_degree;
    std::vector<int> comm_size;
    std::priority_queue<int, std::vector<int>, std::greater<int>> free_labels;

    void init_from(const MultiGraph& g, const std::vector<int>& initial, int num_labels) {
        comm = initial;
        comm_degree.assign(static_cast<std::size_t>(g.n), 0.0);
        comm_size.assign(static_cast<std::size_t>(g.n), 0);
        for (int i = 0; i < g.n; ++i) {
            const auto c = static_cast<std::size_t>(comm[static_cast<std::size_t>(i)]);
            comm_degree[c] += g.degree[static_cast<std::size_t>(i)];
            comm_size[c] += 1;
        }
        free_labels = {};
        for (int c = num_labels; c < g.n; ++c) free_labels.push(c);
    }
};

// delta-Q of moving node v (degree k_v, edge weight w_vs to the rest of its
// community and w_vt to the target) out of a community with total degree d_s
// into one with total degree d_t.
double move_gain(double w_vs, double w_vt, double k_v, double d_s, double d_t, double m, double gamma) {
    return (w_vt - w_vs) / m - gamma * k_v * (d_t - d_s + k_v) / (2.0 * m * m);
}

// One node-move attempt shared by both optimizers. Returns true if v moved.
bool try_move(const MultiGraph& g, CommunityState& st, NeighborAccumulator& nacc, int v, double gamma,
              bool check_increments) {
    const auto vi = static_cast<std::size_t>(v);
    const int curr = st.comm[vi];
    const double k_v = g.degree[vi];

    nacc.begin();
    nacc.add(curr, 0.0);
    for (const auto& [u, w] : g.adj[vi]) nacc.add(st.comm[static_cast<std::size_t>(u)], w);

    const double w_vs = nacc.get(curr);
    const double d_s = st.comm_degree[static_cast<std::size_t>(curr)];

    // Ties break toward the lowest community label so results do not depend
    // on adjacency order.
    int best = curr;
    double best_gain = 0.0;
    for (int c : nacc.touched) {
        if (c == curr) continue;
        const double gain = move_gain(w_vs, nacc.get(c), k_v, d_s,
                                      st.comm_degree[static_cast<std::size_t>(c)], g.m, gamma);
        if (gain > best_gain || (gain == best_gain && best != curr && c < best)) {
            best_gain = gain;
            best = c;
        }
    }
    // A fresh empty community is always a candidate; this is what lets badly
    // connected communities split at aggregate levels.
    if (st.comm_size[static_cast<std::size_t>(curr)] > 1 && !st.free_labels.empty()) {
        const int empty_label = st.free_labels.top();
        const double gain = move_gain(w_vs, 0.0, k_v, d_s, 0.0, g.m, gamma);
        if (gain > best_gain || (gain == best_gain && best != curr && empty_label < best)) {
            best_gain = gain;
            best = empty_label;
        }
    }
    if (best == curr || best_gain <= kMinGain) return false;

    double q_before = 0.0;
    if (check_increments) q_before = modularity_on_multigraph(g, st.comm, gamma);

    if (st.comm_size[static_cast<std::size_t>(best)] == 0) st.free_labels.pop();
    st.comm[vi] = best;
    st.comm_degree[static_cast<std::size_t>(curr)] -= k_v;
    st.comm_degree[static_cast<std::size_t>(best)] += k_v;
    st.comm_size[static_cast<std::size_t>(curr)] -= 1;
    st.comm_size[static_cast<std::size_t>(best)] += 1;
    if (st.comm_size[static_cast<std::size_t>(curr)] == 0) st.free_labels.push(curr);

    if (check_increments) {
        const double q_after = modularity_on_multigraph(g, st.comm, gamma);
        if (std::abs((q_after - q_before) - best_gain) > 1e-10) {
            throw std::logic_error("community: incremental delta-Q disagrees with full recompute");
        }
    }
    return true;
}

// Louvain-style local moving: sweep every node, repeat until a sweep makes no
// move.
bool move_nodes_full_sweeps(const MultiGraph& g, CommunityState& st, NeighborAccumulator& nacc,
                            double gamma, std::mt19937_64& rng, bool check_increments) {
    std::vector<int> order(static_cast<std::size_t>(g.n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    bool any_moved = false;
    bool sweep_moved = true;
    while (sweep_moved) {
        sweep_moved = false;
        for (int v : order) {
            if (try_move(g, st, nacc, v, gamma, check_increments)) sweep_moved = true;
        }
        any_moved |= sweep_moved;
    }
    return any_moved;
}

// Leiden-style fast local moving: first pass in random order, afterwards only
// nodes whose neighborhood changed, FIFO.
bool move_nodes_fast(const MultiGraph& g, CommunityState& st, NeighborAccumulator& nacc, double gamma,
                     std::mt19937_64& rng, bool check_increments) {
    std::vector<int> order(static_cast<std::size_t>(g.n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    std::deque<int> queue(order.begin(), order.end());
    std::vector<char> in_queue(static_cast<std::size_t>(g.n), 1);

    bool any_moved = false;
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        in_queue[static_cast<std::size_t>(v)] = 0;
        if (!try_move(g, st, nacc, v, gamma, check_increments)) continue;
        any_moved = true;
        const int c_new = st.comm[static_cast<std::size_t>(v)];
        for (const auto& [u, w] : g.adj[static_cast<std::size_t>(v)]) {
            auto ui = static_cast<std::size_t>(u);
            if (!in_queue[ui] && st.comm[ui] != c_new) {
                in_queue[ui] = 1;
                queue.push_back(u);
            }
        }
    }
    return any_moved;
}

// Refinement: within each community of `comm`, start from singletons and merge
// nodes that are still alone into neighboring refined communities of the same
// community. Merges happen only along edges, which keeps every refined
// community connected. theta > 0 picks among positive-gain candidates with
// probability proportional to exp(gain/theta).
std::vector<int> refine_partition(const MultiGraph& g, const std::vector<int>& comm, double gamma,
                                  double theta, std::mt19937_64& rng, NeighborAccumulator& nacc) {
    std::vector<int> refined(static_cast<std::size_t>(g.n));
    std::iota(refined.begin(), refined.end(), 0);
    std::vector<double> ref_degree = g.degree;
    std::vector<int> ref_size(static_cast<std::size_t>(g.n), 1);

    std::vector<int> order(static_cast<std::size_t>(g.n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::pair<int, double>> candidates;
    for (int v : order) {
        const auto vi = static_cast<std::size_t>(v);
        if (ref_size[static_cast<std::size_t>(refined[vi])] != 1) continue;

        nacc.begin();
        for (const auto& [u, w] : g.adj[vi]) {
            const auto ui = static_cast<std::size_t>(u);
            if (comm[ui] != comm[vi]) continue;
            if (refined[ui] == refined[vi]) continue;
            nacc.add(refined[ui], w);
        }
        if (nacc.touched.empty()) continue;

        const double k_v = g.degree[vi];
        candidates.clear();
        for (int r : nacc.touched) {
            const double gain =
                nacc.get(r) / g.m - gamma * k_v * ref_degree[static_cast<std::size_t>(r)] / (2.0 * g.m * g.m);
            if (gain > kMinGain) candidates.emplace_back(r, gain);
        }
        if (candidates.empty()) continue;

        int target;
        if (theta <= 0.0) {
            // Ties break toward the lowest label, independent of visit order.
            target = candidates[0].first;
            double best = candidates[0].second;
            for (const auto& [r, gain] : candidates) {
                if (gain > best || (gain == best && r < target)) {
                    best = gain;
                    target = r;
                }
            }
        } else {
            std::sort(candidates.begin(), candidates.end());  // seed-stable sampling order
            double max_gain = candidates[0].second;
            for (const auto& [r, gain] : candidates) max_gain = std::max(max_gain, gain);
            double total = 0.0;
            for (auto& [r, gain] : candidates) {
                gain = std::exp((gain - max_gain) / theta);
                total += gain;
            }
            double pick = std::uniform_real_distribution<double>(0.0, total)(rng);
            target = candidates.back().first;
            for (const auto& [r, weight] : candidates) {
                pick -= weight;
                if (pick <= 0.0) {
                    target = r;
                    break;
                }
            }
        }

        ref_degree[static_cast<std::size_t>(target)] += k_v;
        ref_size[static_cast<std::size_t>(target)] += 1;
        ref_size[static_cast<std::size_t>(refined[vi])] = 0;
        refined[vi] = target;
    }
    return refined;
}

// Aggregate graph whose nodes are the (compact-labeled) groups.
MultiGraph aggregate(const MultiGraph& g, const std::vector<int>& groups, int num_groups) {
    MultiGraph agg;
    agg.n = num_groups;
    agg.adj.resize(static_cast<std::size_t>(num_groups));
    agg.self_loop.assign(static_cast<std::size_t>(num_groups), 0.0);
    agg.degree.assign(static_cast<std::size_t>(num_groups), 0.0);
    agg.m = g.m;

    std::vector<std::vector<int>> members(static_cast<std::size_t>(num_groups));
    for (int v = 0; v < g.n; ++v) members[static_cast<std::size_t>(groups[static_cast<std::size_t>(v)])].push_back(v);

    NeighborAccumulator nacc;
    nacc.init(static_cast<std::size_t>(num_groups));
    for (int r = 0; r < num_groups; ++r) {
        nacc.begin();
        double self = 0.0;
        for (int v : members[static_cast<std::size_t>(r)]) {
            const auto vi = static_cast<std::size_t>(v);
            self += g.self_loop[vi];
            for (const auto& [u, w] : g.adj[vi]) {
                const int s = groups[static_cast<std::size_t>(u)];
                if (s == r) {
                    if (u > v) self += w;
                } else {
                    nacc.add(s, w);
                }
            }
        }
        agg.self_loop[static_cast<std::size_t>(r)] = self;
        std::sort(nacc.touched.begin(), nacc.touched.end());
        auto& row = agg.adj[static_cast<std::size_t>(r)];
        double deg = 2.0 * self;
        for (int s : nacc.touched) {
            const double w = nacc.get(s);
            row.emplace_back(s, w);
            deg += w;
        }
        agg.degree[static_cast<std::size_t>(r)] = deg;
    }
    return agg;
}

void check_preconditions(const SparseGraph& graph, const LeidenParams& params) {
    if (graph.num_edges() == 0) {
        throw std::invalid_argument("community detection requires a graph with at least one edge");
    }
    if (!(params.resolution > 0.0) || !std::isfinite(params.resolution)) {
        throw std::invalid_argument("resolution must be finite and > 0");
    }
    if (params.randomness < 0.0) throw std::invalid_argument("randomness (theta) must be >= 0");
    if (params.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
}

Partition finalize(const SparseGraph& graph, std::vector<int> assignment, bool converged,
                   const LeidenParams& params, bool check_connected) {
    Partition p;
    p.num_communities = compact_labels(assignment);
    p.assignment = std::move(assignment);
    p.converged = converged;
    p.quality = modularity(graph, p, ModularityParams{params.resolution});
    if (check_connected && params.verify_connected && !all_communities_connected(graph, p)) {
        throw std::logic_error("leiden: produced a disconnected community");
    }
    return p;
}

}  // namespace

double modularity(const SparseGraph& graph, const Partition& partition, const ModularityParams& params) {
    partition.validate(static_cast<std::size_t>(graph.num_nodes()));
    if (!(params.resolution > 0.0) || !std::isfinite(params.resolution)) {
        throw std::invalid_argument("resolution must be finite and > 0");
    }
    const double m = graph.total_edge_weight();
    if (!(m > 0.0)) throw std::domain_error("modularity undefined: graph has no edges");

    std::vector<double> intra(static_cast<std::size_t>(partition.num_communities), 0.0);
    std::vector<double> deg(static_cast<std::size_t>(partition.num_communities), 0.0);
    for (int i = 0; i < graph.num_nodes(); ++i) {
        const int c = partition.assignment[static_cast<std::size_t>(i)];
        deg[static_cast<std::size_t>(c)] += graph.degree(i);
        auto nbrs = graph.neighbors(i);
        auto ws = graph.weights(i);
        for (std::size_t t = 0; t < nbrs.size(); ++t) {
            if (nbrs[t] > i && partition.assignment[static_cast<std::size_t>(nbrs[t])] == c) {
                intra[static_cast<std::size_t>(c)] += ws[t];
            }
        }
    }
    double q = 0.0;
    for (int c = 0; c < partition.num_communities; ++c) {
        const double dc = deg[static_cast<std::size_t>(c)] / (2.0 * m);
        q += intra[static_cast<std::size_t>(c)] / m - params.resolution * dc * dc;
    }
    return q;
}

Partition louvain(const SparseGraph& graph, const LeidenParams& params) {
    check_preconditions(graph, params);
    std::mt19937_64 rng(params.seed.seed);

    MultiGraph g = MultiGraph::from_sparse(graph);
    std::vector<int> flat(static_cast<std::size_t>(graph.num_nodes()));
    std::iota(flat.begin(), flat.end(), 0);

    NeighborAccumulator nacc;
    bool converged = false;
    for (int iter = 0; iter < params.max_iterations; ++iter) {
        nacc.init(static_cast<std::size_t>(g.n));
        CommunityState st;
        std::vector<int> singletons(static_cast<std::size_t>(g.n));
        std::iota(singletons.begin(), singletons.end(), 0);
        st.init_from(g, singletons, g.n);

        const bool moved = move_nodes_full_sweeps(g, st, nacc, params.resolution, rng,
                                                  params.check_increments);
        std::vector<int> labels = st.comm;
        const int num_comms = compact_labels(labels);
        if (!moved || num_comms == g.n) {
            converged = true;
            break;
        }
        for (int& f : flat) f = labels[static_cast<std::size_t>(f)];
        g = aggregate(g, labels, num_comms);
        if (num_comms == 1) {
            converged = true;
            break;
        }
    }
    return finalize(graph, std::move(flat), converged, params, /*enforce_connected=*/false);
}

Partition leiden(const SparseGraph& graph, const LeidenParams& params) {
    check_preconditions(graph, params);
    std::mt19937_64 rng(params.seed.seed);

    MultiGraph g = MultiGraph::from_sparse(graph);
    std::vector<int> flat(static_cast<std::size_t>(graph.num_nodes()));
    std::iota(flat.begin(), flat.end(), 0);

    // Step-1 partition carried across levels; starts as singletons.
    std::vector<int> comm_init(static_cast<std::size_t>(g.n));
    std::iota(comm_init.begin(), comm_init.end(), 0);
    int num_init_labels = g.n;

    NeighborAccumulator nacc;
    bool converged = false;
    for (int iter = 0; iter < params.max_iterations; ++iter) {
        nacc.init(static_cast<std::size_t>(g.n));
        CommunityState st;
        st.init_from(g, comm_init, num_init_labels);

        move_nodes_fast(g, st, nacc, params.resolution, rng, params.check_increments);
        std::vector<int> step1 = st.comm;
        const int num_comms = compact_labels(step1);

        // Converged once every aggregate node sits in its own community: each
        // node is a refined group from the previous level, which was merged
        // together along edges and is therefore connected.
        if (num_comms == g.n) {
            for (int& f : flat) f = step1[static_cast<std::size_t>(f)];
            converged = true;
            break;
        }

        std::vector<int> refined = refine_partition(g, st.comm, params.resolution, params.randomness,
                                                    rng, nacc);
        const int num_refined = compact_labels(refined);
        if (num_refined == g.n) {
            // Refinement kept everything singleton: aggregation would not
            // shrink the graph, so the local-move partition stands.
            for (int& f : flat) f = step1[static_cast<std::size_t>(f)];
            converged = true;
            break;
        }

        // Initial assignment of each refined group on the aggregate graph is
        // the Step-1 community it came from.
        std::vector<int> next_init(static_cast<std::size_t>(num_refined), -1);
        for (int v = 0; v < g.n; ++v) {
            next_init[static_cast<std::size_t>(refined[static_cast<std::size_t>(v)])] =
                step1[static_cast<std::size_t>(v)];
        }

        for (int& f : flat) f = refined[static_cast<std::size_t>(f)];
        g = aggregate(g, refined, num_refined);
        comm_init = std::move(next_init);
        num_init_labels = num_comms;

        if (iter + 1 == params.max_iterations) {
            // Out of budget: lift the current Step-1 communities.
            for (int& f : flat) f = comm_init[static_cast<std::size_t>(f)];
        }
    }
    return finalize(graph, std::move(flat), converged, params, /*enforce_connected=*/true);
}

MatrixXfR community_means(const EmbeddingSet& embeddings, const Partition& partition) {
    embeddings.validate();
    partition.validate(static_cast<std::size_t>(embeddings.num_rows()));

    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> sums =
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(
            partition.num_communities, embeddings.dim());
    std::vector<int> counts(static_cast<std::size_t>(partition.num_communities), 0);
    for (Eigen::Index i = 0; i < embeddings.num_rows(); ++i) {
        const int c = partition.assignment[static_cast<std::size_t>(i)];
        sums.row(c) += embeddings.vectors.row(i).cast<double>();
        counts[static_cast<std::size_t>(c)] += 1;
    }
    for (int c = 0; c < partition.num_communities; ++c) {
        sums.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    }
    return sums.cast<float>();
}

bool all_communities_connected(const SparseGraph& graph, const Partition& partition) {
    partition.validate(static_cast<std::size_t>(graph.num_nodes()));
    const int n = graph.num_nodes();
    std::vector<int> root(static_cast<std::size_t>(partition.num_communities), -1);
    std::vector<int> comm_count(static_cast<std::size_t>(partition.num_communities), 0);
    for (int v = 0; v < n; ++v) {
        const int c = partition.assignment[static_cast<std::size_t>(v)];
        comm_count[static_cast<std::size_t>(c)] += 1;
        if (root[static_cast<std::size_t>(c)] < 0) root[static_cast<std::size_t>(c)] = v;
    }

    std::vector<char> visited(static_cast<std::size_t>(n), 0);
    std::vector<int> stack;
    for (int c = 0; c < partition.num_communities; ++c) {
        int reached = 0;
        stack.assign(1, root[static_cast<std::size_t>(c)]);
        visited[static_cast<std::size_t>(root[static_cast<std::size_t>(c)])] = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            ++reached;
            for (int u : graph.neighbors(v)) {
                if (!visited[static_cast<std::size_t>(u)] &&
                    partition.assignment[static_cast<std::size_t>(u)] == c) {
                    visited[static_cast<std::size_t>(u)] = 1;
                    stack.push_back(u);
                }
            }
        }
        if (reached != comm_count[static_cast<std::size_t>(c)]) return false;
    }
    return true;
}

}  // namespace commdiar
