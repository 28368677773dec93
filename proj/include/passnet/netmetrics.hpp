#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "passnet/network.hpp"

namespace passnet {

/// Simple undirected unweighted graph stored as a dense 0/1 matrix.
class UndirectedGraph {
public:
    explicit UndirectedGraph(std::size_t n) : n_(n), adjacency_(n * n, 0) {}

    std::size_t size() const { return n_; }
    bool adjacent(std::size_t u, std::size_t v) const { return adjacency_[u * n_ + v] != 0; }
    void connect(std::size_t u, std::size_t v);
    void disconnect(std::size_t u, std::size_t v);
    std::size_t degree(std::size_t v) const;
    std::size_t edge_count() const;

    /// Hop distances from `source`; -1 marks unreachable vertices.
    std::vector<int> distances_from(std::size_t source) const;
    /// Component id per vertex, numbered in order of lowest member.
    std::vector<std::size_t> components() const;

private:
    std::size_t n_;
    std::vector<std::uint8_t> adjacency_;
};

/// {u,v} is an edge iff any completed pass went either way between the slots.
UndirectedGraph projection(const PassingNetwork& network);

enum class NodeMetric { DegreeCentrality, Closeness, Betweenness, Eigenvector, Clustering };

inline constexpr std::array<NodeMetric, 5> kNodeMetrics = {
    NodeMetric::DegreeCentrality, NodeMetric::Closeness, NodeMetric::Betweenness,
    NodeMetric::Eigenvector, NodeMetric::Clustering};

/// Column stem used in CSV headers and feature names.
std::string_view metric_name(NodeMetric metric);

struct NodeMetricVector {
    NodeMetric metric;
    std::vector<double> values;
};

std::vector<double> degree_centrality(const UndirectedGraph& g);
std::vector<double> closeness_centrality(const UndirectedGraph& g);
std::vector<double> betweenness_centrality(const UndirectedGraph& g);
std::vector<double> clustering_coefficient(const UndirectedGraph& g);
std::optional<double> average_shortest_path(const UndirectedGraph& g);

struct EigenvectorResult {
    std::vector<double> values;
    double eigenvalue = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    /// Set when the graph has no edges; values are then all zero.
    bool no_edges = false;
};

/// Principal eigenvector of the largest connected component, found by power
/// iteration on A + I (same eigenvectors, no oscillation on bipartite
/// components). Vertices outside that component get 0.
EigenvectorResult eigenvector_centrality(const UndirectedGraph& g);

NodeMetricVector degree_centrality(const PassingNetwork& net);
NodeMetricVector closeness_centrality(const PassingNetwork& net);
NodeMetricVector betweenness_centrality(const PassingNetwork& net);
NodeMetricVector eigenvector_centrality(const PassingNetwork& net);
NodeMetricVector clustering_coefficient(const PassingNetwork& net);
std::optional<double> average_shortest_path(const PassingNetwork& net);

struct Centroid {
    double mean_x = 0.0;
    double mean_y = 0.0;
    double std_x = 0.0;
    double std_y = 0.0;
};

/// Throws NoPositions when no slot has a position.
Centroid network_centroid(const PassingNetwork& net);

struct Aggregate {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    double std = 0.0;
};

/// Population statistics; empty input yields all zeros.
Aggregate aggregate_values(const std::vector<double>& values);

struct NetworkMetrics {
    std::array<Aggregate, kNodeMetrics.size()> node{};
    std::optional<double> avg_shortest_path;
    std::optional<Centroid> centroid;
    bool eigenvector_no_edges = false;

    /// `<agg>_<metric>` for agg in min,max,avg,std, then avg_shortest_path and
    /// the four centroid columns.
    static const std::vector<std::string>& column_names();
    /// Aligned with column_names(); nullopt marks a missing value.
    std::vector<std::optional<double>> values() const;
};

NetworkMetrics aggregate(const PassingNetwork& net);

struct MetricsRow {
    std::string match_id;
    std::string team_id;
    Segment segment = Segment::Full;
    std::vector<std::optional<double>> values;
};

std::string write_metrics_csv(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(std::string_view csv);

}  // namespace passnet
