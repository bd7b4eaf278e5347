#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

// Exact discrete optimal transport. The Hungarian routine handles the
// uniform equal-size case; the transportation simplex handles arbitrary
// weights.

namespace mcmcdegen::transport {

/// Minimum-cost perfect matching on a square cost matrix (shortest augmenting
/// paths with potentials). Returns the assignment row -> column.
inline std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    require(cost.cols() == n, "hungarian: cost matrix must be square");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> match(n + 1, 0), way(n + 1, 0); // match[col] = row, 1-based
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assignment(n);
    for (int j = 1; j <= n; ++j) assignment[match[j] - 1] = j - 1;
    return assignment;
}

struct TransportResult {
    double cost = 0.0;
    int iterations = 0;
};

/// Balanced transportation problem min <C, P> s.t. P 1 = a, P^T 1 = b, P >= 0,
/// solved by the transportation simplex (north-west corner start, MODI
/// pricing, stepping-stone pivots on the basis tree).
inline TransportResult transportation_simplex(const Eigen::VectorXd& a_in, const Eigen::VectorXd& b_in,
                                              const Eigen::MatrixXd& cost, int max_iter = 0) {
    const int m = static_cast<int>(a_in.size());
    const int n = static_cast<int>(b_in.size());
    require(m >= 1 && n >= 1 && cost.rows() == m && cost.cols() == n, "transportation_simplex: shape mismatch");
    require((a_in.array() >= 0).all() && (b_in.array() >= 0).all(), "transportation_simplex: negative mass");
    require(std::abs(a_in.sum() - b_in.sum()) < 1e-9 * std::max(1.0, a_in.sum()),
            "transportation_simplex: unbalanced masses");
    if (max_iter <= 0) max_iter = 50 * (m + n) * (m + n) + 1000;

    struct Cell {
        int i, j;
        double flow;
    };
    std::vector<Cell> basis;
    basis.reserve(m + n - 1);
    {
        Eigen::VectorXd a = a_in, b = b_in;
        int i = 0, j = 0;
        for (;;) {
            const double f = std::min(a[i], b[j]);
            basis.push_back({i, j, f});
            a[i] -= f;
            b[j] -= f;
            if (i == m - 1 && j == n - 1) break;
            if (j == n - 1 || (i < m - 1 && a[i] <= b[j])) ++i;
            else ++j;
        }
    }

    const int nodes = m + n; // rows 0..m-1, columns m..m+n-1
    std::vector<std::vector<int>> adj(nodes);
    std::vector<double> pot(nodes);
    std::vector<int> parent_cell(nodes), order;
    std::vector<char> seen(nodes);
    order.reserve(nodes);

    auto rebuild_adjacency = [&] {
        for (auto& l : adj) l.clear();
        for (int k = 0; k < static_cast<int>(basis.size()); ++k) {
            adj[basis[k].i].push_back(k);
            adj[m + basis[k].j].push_back(k);
        }
    };
    auto other = [&](int cell, int node) { return node < m ? m + basis[cell].j : basis[cell].i; };
    // Breadth-first traversal of the basis tree from `root`; fills parent_cell.
    auto traverse = [&](int root) {
        std::fill(seen.begin(), seen.end(), 0);
        order.clear();
        order.push_back(root);
        seen[root] = 1;
        parent_cell[root] = -1;
        for (std::size_t h = 0; h < order.size(); ++h) {
            const int node = order[h];
            for (int cell : adj[node]) {
                const int nb = other(cell, node);
                if (seen[nb]) continue;
                seen[nb] = 1;
                parent_cell[nb] = cell;
                order.push_back(nb);
            }
        }
        if (static_cast<int>(order.size()) != nodes) throw NumericalError("transportation_simplex: basis is not a spanning tree");
    };

    const double scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        rebuild_adjacency();
        traverse(0);
        pot[0] = 0.0;
        for (std::size_t h = 1; h < order.size(); ++h) {
            const int node = order[h];
            const Cell& c = basis[parent_cell[node]];
            // cost(i, j) = u_i + v_j
            if (node < m) pot[node] = cost(c.i, c.j) - pot[m + c.j];
            else pot[node] = cost(c.i, c.j) - pot[c.i];
        }
        double best = -1e-12 * scale;
        int ei = -1, ej = -1;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < n; ++j) {
                const double r = cost(i, j) - pot[i] - pot[m + j];
                if (r < best) {
                    best = r;
                    ei = i;
                    ej = j;
                }
            }
        }
        if (ei < 0) break;

        // Tree path from column ej back to row ei.
        traverse(ei);
        std::vector<int> path;
        for (int node = m + ej; node != ei;) {
            const int cell = parent_cell[node];
            path.push_back(cell);
            node = other(cell, node);
        }
        double theta = std::numeric_limits<double>::infinity();
        int leave = -1;
        for (std::size_t k = 0; k < path.size(); k += 2) {
            if (basis[path[k]].flow < theta) {
                theta = basis[path[k]].flow;
                leave = path[k];
            }
        }
        for (std::size_t k = 0; k < path.size(); ++k) basis[path[k]].flow += (k % 2 == 0 ? -theta : theta);
        basis[leave] = {ei, ej, theta};
    }
    if (iter >= max_iter) throw NumericalError("transportation_simplex: iteration limit reached");

    TransportResult out;
    out.iterations = iter;
    double total = 0.0;
    for (const Cell& c : basis) total += std::max(c.flow, 0.0) * cost(c.i, c.j);
    out.cost = total;
    return out;
}

} // namespace mcmcdegen::transport
