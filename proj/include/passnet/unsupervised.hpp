#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace passnet {

/// Column z-scores with population std. Constant columns are dropped.
struct Standardized {
    Eigen::MatrixXd data;
    Eigen::VectorXd mean;   // per kept column
    Eigen::VectorXd scale;  // per kept column
    std::vector<std::size_t> kept;
    std::vector<std::size_t> dropped;
};

Standardized standardize(const Eigen::MatrixXd& data);

struct KMeansResult {
    std::vector<int> assignments;
    Eigen::MatrixXd centroids;
    double wcss = 0.0;
    std::size_t best_restart = 0;
    /// wcss after every Lloyd iteration, per restart.
    std::vector<std::vector<double>> wcss_trace;
};

/// Lloyd iterations from k-means++ seeds, best of `n_init` restarts by
/// (wcss, restart index). Empty clusters are re-seeded at the point farthest
/// from its centroid.
KMeansResult kmeans(const Eigen::MatrixXd& data, std::size_t k, std::uint64_t seed,
                    std::size_t n_init = 10, std::size_t max_iter = 300, double tol = 1e-6);

double within_cluster_ss(const Eigen::MatrixXd& data, std::span<const int> assignments,
                         const Eigen::MatrixXd& centroids);

/// Mean silhouette coefficient; points in singleton clusters score 0.
double silhouette(const Eigen::MatrixXd& data, std::span<const int> assignments);

/// Mutual information over the arithmetic mean of the entropies; 0 when
/// either labeling is constant.
double nmi(std::span<const int> a, std::span<const int> b);

struct PcaModel {
    Standardized standardization;
    /// Columns are unit-length components, ordered by decreasing variance.
    Eigen::MatrixXd components;
    Eigen::VectorXd eigenvalues;
    Eigen::VectorXd explained_variance_ratio;
};

PcaModel pca(const Eigen::MatrixXd& data);

/// Scores of `data` on the first `n_components` components.
Eigen::MatrixXd project(const PcaModel& model, const Eigen::MatrixXd& data, std::size_t n_components);

/// Maps component scores back to the original columns.
Eigen::MatrixXd reconstruct(const PcaModel& model, const Eigen::MatrixXd& scores);

struct ScanRow {
    std::size_t k = 0;
    double wcss = 0.0;
    double silhouette = 0.0;
    double nmi = 0.0;
    std::vector<int> assignments;
};

struct ClusterScan {
    bool with_pca = false;
    std::vector<ScanRow> rows;
};

/// Standardizes `data` (then projects it onto `n_components` principal
/// components when `with_pca`) and runs k-means for each k, scoring the
/// clusters against `league_labels`.
ClusterScan elbow_scan(const Eigen::MatrixXd& data, std::span<const int> league_labels,
                       std::span<const std::size_t> k_values, std::uint64_t seed, bool with_pca,
                       std::size_t n_components);

/// `k,wcss,silhouette,nmi,with_pca`
std::string scan_csv(const std::vector<ClusterScan>& scans);
/// `component,explained_ratio,cumulative_ratio`
std::string pca_csv(const PcaModel& model);

}  // namespace passnet
