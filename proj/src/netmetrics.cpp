#include "passnet/netmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "passnet/error.hpp"
#include "passnet/io_util.hpp"

namespace passnet {

namespace {

constexpr double kEigenTolerance = 1e-10;
constexpr std::size_t kEigenMaxIterations = 10'000;

NodeMetricVector wrap(NodeMetric metric, std::vector<double> values) {
    return {metric, std::move(values)};
}

}  // namespace

void UndirectedGraph::connect(std::size_t u, std::size_t v) {
    if (u == v) return;
    adjacency_[u * n_ + v] = 1;
    adjacency_[v * n_ + u] = 1;
}

void UndirectedGraph::disconnect(std::size_t u, std::size_t v) {
    adjacency_[u * n_ + v] = 0;
    adjacency_[v * n_ + u] = 0;
}

std::size_t UndirectedGraph::degree(std::size_t v) const {
    std::size_t d = 0;
    for (std::size_t u = 0; u < n_; ++u) d += adjacency_[v * n_ + u];
    return d;
}

std::size_t UndirectedGraph::edge_count() const {
    std::size_t total = 0;
    for (std::size_t v = 0; v < n_; ++v) total += degree(v);
    return total / 2;
}

std::vector<int> UndirectedGraph::distances_from(std::size_t source) const {
    std::vector<int> dist(n_, -1);
    std::queue<std::size_t> frontier;
    dist[source] = 0;
    frontier.push(source);
    while (!frontier.empty()) {
        const std::size_t u = frontier.front();
        frontier.pop();
        for (std::size_t v = 0; v < n_; ++v) {
            if (adjacent(u, v) && dist[v] < 0) {
                dist[v] = dist[u] + 1;
                frontier.push(v);
            }
        }
    }
    return dist;
}

std::vector<std::size_t> UndirectedGraph::components() const {
    constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> id(n_, kUnset);
    std::size_t next = 0;
    for (std::size_t v = 0; v < n_; ++v) {
        if (id[v] != kUnset) continue;
        const auto dist = distances_from(v);
        for (std::size_t u = 0; u < n_; ++u) {
            if (dist[u] >= 0) id[u] = next;
        }
        ++next;
    }
    return id;
}

UndirectedGraph projection(const PassingNetwork& network) {
    UndirectedGraph g(kSlots);
    for (std::size_t i = 0; i < kSlots; ++i) {
        for (std::size_t j = i + 1; j < kSlots; ++j) {
            if (network.weights[i][j] + network.weights[j][i] > 0) g.connect(i, j);
        }
    }
    return g;
}

std::string_view metric_name(NodeMetric metric) {
    switch (metric) {
        case NodeMetric::DegreeCentrality: return "degree_centrality";
        case NodeMetric::Closeness: return "closeness_centrality";
        case NodeMetric::Betweenness: return "betweenness_centrality";
        case NodeMetric::Eigenvector: return "eigenvector_centrality";
        case NodeMetric::Clustering: return "clustering";
    }
    return "";
}

std::vector<double> degree_centrality(const UndirectedGraph& g) {
    const std::size_t n = g.size();
    std::vector<double> out(n, 0.0);
    if (n < 2) return out;
    for (std::size_t v = 0; v < n; ++v) {
        out[v] = static_cast<double>(g.degree(v)) / static_cast<double>(n - 1);
    }
    return out;
}

std::vector<double> closeness_centrality(const UndirectedGraph& g) {
    const std::size_t n = g.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        const auto dist = g.distances_from(v);
        long total = 0;
        std::size_t reached = 0;
        for (std::size_t u = 0; u < n; ++u) {
            if (u != v && dist[u] > 0) {
                total += dist[u];
                ++reached;
            }
        }
        if (reached == 0) continue;
        const double r = static_cast<double>(reached);
        out[v] = (r / static_cast<double>(total)) * (r / static_cast<double>(n - 1));
    }
    return out;
}

// Brandes accumulation; each unordered pair is visited from both ends.
std::vector<double> betweenness_centrality(const UndirectedGraph& g) {
    const std::size_t n = g.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<std::size_t> order;
        std::vector<std::vector<std::size_t>> parents(n);
        std::vector<double> sigma(n, 0.0);
        std::vector<int> dist(n, -1);
        sigma[s] = 1.0;
        dist[s] = 0;
        std::queue<std::size_t> frontier;
        frontier.push(s);
        while (!frontier.empty()) {
            const std::size_t u = frontier.front();
            frontier.pop();
            order.push_back(u);
            for (std::size_t w = 0; w < n; ++w) {
                if (!g.adjacent(u, w)) continue;
                if (dist[w] < 0) {
                    dist[w] = dist[u] + 1;
                    frontier.push(w);
                }
                if (dist[w] == dist[u] + 1) {
                    sigma[w] += sigma[u];
                    parents[w].push_back(u);
                }
            }
        }
        std::vector<double> delta(n, 0.0);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const std::size_t w = *it;
            for (const std::size_t u : parents[w]) {
                delta[u] += sigma[u] / sigma[w] * (1.0 + delta[w]);
            }
            if (w != s) out[w] += delta[w];
        }
    }
    for (auto& v : out) v /= 2.0;
    return out;
}

std::vector<double> clustering_coefficient(const UndirectedGraph& g) {
    const std::size_t n = g.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        const std::size_t d = g.degree(v);
        if (d < 2) continue;
        std::size_t triangles = 0;
        for (std::size_t a = 0; a < n; ++a) {
            if (!g.adjacent(v, a)) continue;
            for (std::size_t b = a + 1; b < n; ++b) {
                if (g.adjacent(v, b) && g.adjacent(a, b)) ++triangles;
            }
        }
        out[v] = 2.0 * static_cast<double>(triangles) / static_cast<double>(d * (d - 1));
    }
    return out;
}

std::optional<double> average_shortest_path(const UndirectedGraph& g) {
    long total = 0;
    long pairs = 0;
    for (std::size_t s = 0; s < g.size(); ++s) {
        const auto dist = g.distances_from(s);
        for (std::size_t t = 0; t < g.size(); ++t) {
            if (t != s && dist[t] > 0) {
                total += dist[t];
                ++pairs;
            }
        }
    }
    if (pairs == 0) return std::nullopt;
    return static_cast<double>(total) / static_cast<double>(pairs);
}

EigenvectorResult eigenvector_centrality(const UndirectedGraph& g) {
    const std::size_t n = g.size();
    EigenvectorResult result;
    result.values.assign(n, 0.0);
    if (g.edge_count() == 0) {
        result.no_edges = true;
        return result;
    }

    const auto component = g.components();
    std::vector<std::size_t> sizes(n, 0);
    for (const auto c : component) ++sizes[c];
    const std::size_t largest =
        static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());

    std::vector<double> x(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        if (component[v] == largest) x[v] = 1.0;
    }
    const auto normalize = [](std::vector<double>& vec) {
        const double norm = std::sqrt(std::inner_product(vec.begin(), vec.end(), vec.begin(), 0.0));
        for (auto& e : vec) e /= norm;
    };
    normalize(x);

    std::vector<double> next(n);
    for (result.iterations = 1; result.iterations <= kEigenMaxIterations; ++result.iterations) {
        for (std::size_t v = 0; v < n; ++v) {
            double acc = x[v];
            for (std::size_t u = 0; u < n; ++u) {
                if (g.adjacent(v, u)) acc += x[u];
            }
            next[v] = acc;
        }
        normalize(next);
        double shift = 0.0;
        for (std::size_t v = 0; v < n; ++v) shift = std::max(shift, std::abs(next[v] - x[v]));
        x.swap(next);
        if (shift < kEigenTolerance) {
            result.converged = true;
            break;
        }
    }
    result.iterations = std::min(result.iterations, kEigenMaxIterations);

    // Rayleigh quotient x'Ax with ||x|| = 1.
    double lambda = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
        for (std::size_t u = 0; u < n; ++u) {
            if (g.adjacent(v, u)) lambda += x[v] * x[u];
        }
    }
    result.eigenvalue = lambda;
    result.values = std::move(x);
    return result;
}

NodeMetricVector degree_centrality(const PassingNetwork& net) {
    return wrap(NodeMetric::DegreeCentrality, degree_centrality(projection(net)));
}
NodeMetricVector closeness_centrality(const PassingNetwork& net) {
    return wrap(NodeMetric::Closeness, closeness_centrality(projection(net)));
}
NodeMetricVector betweenness_centrality(const PassingNetwork& net) {
    return wrap(NodeMetric::Betweenness, betweenness_centrality(projection(net)));
}
NodeMetricVector eigenvector_centrality(const PassingNetwork& net) {
    return wrap(NodeMetric::Eigenvector, eigenvector_centrality(projection(net)).values);
}
NodeMetricVector clustering_coefficient(const PassingNetwork& net) {
    return wrap(NodeMetric::Clustering, clustering_coefficient(projection(net)));
}
std::optional<double> average_shortest_path(const PassingNetwork& net) {
    return average_shortest_path(projection(net));
}

Centroid network_centroid(const PassingNetwork& net) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& p : net.positions) {
        if (!p) continue;
        xs.push_back(p->x);
        ys.push_back(p->y);
    }
    if (xs.empty()) {
        throw Error(ErrorKind::NoPositions,
                    fmt::format("network {}/{} has no positioned slot", net.match_id, net.team_id));
    }
    const Aggregate ax = aggregate_values(xs);
    const Aggregate ay = aggregate_values(ys);
    return {ax.mean, ay.mean, ax.std, ay.std};
}

Aggregate aggregate_values(const std::vector<double>& values) {
    if (values.empty()) return {};
    Aggregate a;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    a.min = *lo;
    a.max = *hi;
    const double n = static_cast<double>(values.size());
    a.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (const double v : values) ss += (v - a.mean) * (v - a.mean);
    a.std = std::sqrt(ss / n);
    // Summation error can push the mean a hair outside [min, max].
    a.mean = std::clamp(a.mean, a.min, a.max);
    return a;
}

const std::vector<std::string>& NetworkMetrics::column_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto metric : kNodeMetrics) {
            for (const char* agg : {"min", "max", "avg", "std"}) {
                out.push_back(fmt::format("{}_{}", agg, metric_name(metric)));
            }
        }
        out.insert(out.end(), {"avg_shortest_path", "centroid_mean_x", "centroid_mean_y",
                               "centroid_std_x", "centroid_std_y"});
        return out;
    }();
    return names;
}

std::vector<std::optional<double>> NetworkMetrics::values() const {
    std::vector<std::optional<double>> out;
    out.reserve(column_names().size());
    for (const auto& a : node) {
        out.insert(out.end(), {a.min, a.max, a.mean, a.std});
    }
    out.push_back(avg_shortest_path);
    if (centroid) {
        out.insert(out.end(), {centroid->mean_x, centroid->mean_y, centroid->std_x, centroid->std_y});
    } else {
        out.insert(out.end(), 4, std::nullopt);
    }
    return out;
}

NetworkMetrics aggregate(const PassingNetwork& net) {
    const UndirectedGraph g = projection(net);
    const auto eigen = eigenvector_centrality(g);
    const std::array<std::vector<double>, kNodeMetrics.size()> vectors = {
        degree_centrality(g), closeness_centrality(g), betweenness_centrality(g), eigen.values,
        clustering_coefficient(g)};

    NetworkMetrics m;
    for (std::size_t k = 0; k < vectors.size(); ++k) m.node[k] = aggregate_values(vectors[k]);
    m.eigenvector_no_edges = eigen.no_edges;
    m.avg_shortest_path = average_shortest_path(g);
    const bool any_position =
        std::any_of(net.positions.begin(), net.positions.end(), [](const auto& p) { return p.has_value(); });
    if (any_position) m.centroid = network_centroid(net);
    return m;
}

std::string write_metrics_csv(const std::vector<MetricsRow>& rows) {
    std::string out = fmt::format("match_id,team_id,segment,{}\n",
                                  fmt::join(NetworkMetrics::column_names(), ","));
    for (const auto& row : rows) {
        out += fmt::format("{},{},{}", row.match_id, row.team_id, to_string(row.segment));
        for (const auto& v : row.values) {
            out += ',';
            if (v) out += io::format_double(*v);
        }
        out += '\n';
    }
    return out;
}

std::vector<MetricsRow> read_metrics_csv(std::string_view csv) {
    const auto rows = io::lines(csv);
    std::vector<MetricsRow> out;
    if (rows.empty()) return out;
    const std::size_t width = 3 + NetworkMetrics::column_names().size();
    if (io::split(rows.front(), ',').size() != width) {
        throw Error(ErrorKind::MalformedInput, "metrics CSV header does not match metric columns");
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto f = io::split(rows[r], ',');
        if (f.size() != width) {
            throw Error(ErrorKind::MalformedInput, fmt::format("metrics CSV line {}: bad width", r + 1));
        }
        MetricsRow row{f[0], f[1], parse_segment(f[2]), {}};
        for (std::size_t c = 3; c < width; ++c) {
            row.values.push_back(f[c].empty() ? std::nullopt
                                              : std::optional<double>(io::parse_double(f[c], "metric")));
        }
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace passnet
