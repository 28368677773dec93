#include "passnet/unsupervised.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <fmt/format.h>

#include "passnet/error.hpp"
#include "passnet/io_util.hpp"
#include "passnet/parallel.hpp"
#include "passnet/random.hpp"

namespace passnet {

namespace {

struct Restart {
    std::vector<int> assignments;
    Eigen::MatrixXd centroids;
    double wcss = 0.0;
    std::vector<double> trace;
};

Eigen::MatrixXd plus_plus_seeds(const Eigen::MatrixXd& data, std::size_t k, Rng& rng) {
    const auto n = static_cast<std::size_t>(data.rows());
    Eigen::MatrixXd centroids(static_cast<Eigen::Index>(k), data.cols());
    centroids.row(0) = data.row(static_cast<Eigen::Index>(rng.index(n)));
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = (data.row(static_cast<Eigen::Index>(i)) -
                              centroids.row(static_cast<Eigen::Index>(c - 1))).squaredNorm();
            nearest[i] = std::min(nearest[i], d);
            total += nearest[i];
        }
        std::size_t chosen = n - 1;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            for (std::size_t i = 0; i < n; ++i) {
                target -= nearest[i];
                if (target < 0.0 && nearest[i] > 0.0) {
                    chosen = i;
                    break;
                }
            }
            while (nearest[chosen] == 0.0 && chosen > 0) --chosen;
        } else {
            chosen = rng.index(n);
        }
        centroids.row(static_cast<Eigen::Index>(c)) = data.row(static_cast<Eigen::Index>(chosen));
    }
    return centroids;
}

Restart lloyd(const Eigen::MatrixXd& data, std::size_t k, Rng& rng, std::size_t max_iter, double tol) {
    const auto n = data.rows();
    const auto kk = static_cast<Eigen::Index>(k);
    Restart r;
    r.centroids = plus_plus_seeds(data, k, rng);
    r.assignments.assign(static_cast<std::size_t>(n), 0);

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index best = 0;
            (r.centroids.rowwise() - data.row(i)).rowwise().squaredNorm().minCoeff(&best);
            r.assignments[static_cast<std::size_t>(i)] = static_cast<int>(best);
        }
        Eigen::MatrixXd updated = Eigen::MatrixXd::Zero(kk, data.cols());
        std::vector<Eigen::Index> counts(k, 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto c = r.assignments[static_cast<std::size_t>(i)];
            updated.row(c) += data.row(i);
            ++counts[static_cast<std::size_t>(c)];
        }
        for (Eigen::Index c = 0; c < kk; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                updated.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
            }
        }
        for (Eigen::Index c = 0; c < kk; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            // Move the worst-served point into the empty cluster.
            Eigen::Index far = 0;
            double far_d = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto owner = r.assignments[static_cast<std::size_t>(i)];
                if (counts[static_cast<std::size_t>(owner)] <= 1) continue;
                const double d = (data.row(i) - updated.row(owner)).squaredNorm();
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            const auto owner = r.assignments[static_cast<std::size_t>(far)];
            updated.row(owner) = (updated.row(owner) * static_cast<double>(counts[static_cast<std::size_t>(owner)]) -
                                  data.row(far)) /
                                 static_cast<double>(counts[static_cast<std::size_t>(owner)] - 1);
            --counts[static_cast<std::size_t>(owner)];
            r.assignments[static_cast<std::size_t>(far)] = static_cast<int>(c);
            updated.row(c) = data.row(far);
            counts[static_cast<std::size_t>(c)] = 1;
        }
        const double shift = (updated - r.centroids).rowwise().norm().maxCoeff();
        r.centroids = std::move(updated);
        r.wcss = within_cluster_ss(data, r.assignments, r.centroids);
        r.trace.push_back(r.wcss);
        if (shift < tol) break;
    }
    return r;
}

double entropy(const std::map<int, double>& counts, double n) {
    double h = 0.0;
    for (const auto& [_, c] : counts) {
        if (c > 0) h -= (c / n) * std::log(c / n);
    }
    return h;
}

}  // namespace

Standardized standardize(const Eigen::MatrixXd& data) {
    if (data.rows() == 0 || data.cols() == 0) throw Error(ErrorKind::EmptyData, "nothing to standardize");
    Standardized s;
    std::vector<double> means;
    std::vector<double> scales;
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
        const double mean = data.col(j).mean();
        const double sd = std::sqrt((data.col(j).array() - mean).square().mean());
        if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
            s.dropped.push_back(static_cast<std::size_t>(j));
            continue;
        }
        s.kept.push_back(static_cast<std::size_t>(j));
        means.push_back(mean);
        scales.push_back(sd);
    }
    if (s.kept.empty()) throw Error(ErrorKind::EmptyData, "every column is constant");
    const auto kept = static_cast<Eigen::Index>(s.kept.size());
    s.mean = Eigen::Map<Eigen::VectorXd>(means.data(), kept);
    s.scale = Eigen::Map<Eigen::VectorXd>(scales.data(), kept);
    s.data.resize(data.rows(), kept);
    for (Eigen::Index j = 0; j < kept; ++j) {
        s.data.col(j) = (data.col(static_cast<Eigen::Index>(s.kept[static_cast<std::size_t>(j)])).array() - s.mean(j)) /
                        s.scale(j);
    }
    return s;
}

double within_cluster_ss(const Eigen::MatrixXd& data, std::span<const int> assignments,
                         const Eigen::MatrixXd& centroids) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        total += (data.row(i) - centroids.row(assignments[static_cast<std::size_t>(i)])).squaredNorm();
    }
    return total;
}

KMeansResult kmeans(const Eigen::MatrixXd& data, std::size_t k, std::uint64_t seed, std::size_t n_init,
                    std::size_t max_iter, double tol) {
    if (data.rows() == 0) throw Error(ErrorKind::EmptyData, "k-means on empty data");
    std::set<std::vector<double>> distinct;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(data.cols()));
        for (Eigen::Index j = 0; j < data.cols(); ++j) row[static_cast<std::size_t>(j)] = data(i, j);
        distinct.insert(std::move(row));
    }
    if (k == 0 || k > distinct.size()) {
        throw Error(ErrorKind::KTooLarge,
                    fmt::format("k={} exceeds {} distinct rows", k, distinct.size()));
    }

    std::vector<Restart> restarts(std::max<std::size_t>(n_init, 1));
    parallel_for(restarts.size(), [&](std::size_t r) {
        Rng rng(derive_seed(seed, r));
        restarts[r] = lloyd(data, k, rng, max_iter, tol);
    });

    KMeansResult result;
    for (std::size_t r = 0; r < restarts.size(); ++r) {
        if (r == 0 || restarts[r].wcss < restarts[result.best_restart].wcss) result.best_restart = r;
        result.wcss_trace.push_back(restarts[r].trace);
    }
    auto& best = restarts[result.best_restart];
    result.assignments = std::move(best.assignments);
    result.centroids = std::move(best.centroids);
    result.wcss = best.wcss;
    return result;
}

double silhouette(const Eigen::MatrixXd& data, std::span<const int> assignments) {
    const auto n = static_cast<std::size_t>(data.rows());
    if (assignments.size() != n) throw Error(ErrorKind::LengthMismatch, "assignments length mismatch");
    std::map<int, std::size_t> sizes;
    for (const int a : assignments) ++sizes[a];
    if (sizes.size() < 2) throw Error(ErrorKind::SingleCluster, "silhouette needs two clusters");

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (sizes[assignments[i]] == 1) continue;
        std::map<int, double> dist_sum;
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            dist_sum[assignments[j]] +=
                (data.row(static_cast<Eigen::Index>(i)) - data.row(static_cast<Eigen::Index>(j))).norm();
        }
        const double a = dist_sum[assignments[i]] / static_cast<double>(sizes[assignments[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [cluster, sum] : dist_sum) {
            if (cluster != assignments[i]) b = std::min(b, sum / static_cast<double>(sizes[cluster]));
        }
        const double denom = std::max(a, b);
        if (denom > 0.0) total += (b - a) / denom;
    }
    return total / static_cast<double>(n);
}

double nmi(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw Error(ErrorKind::LengthMismatch, "labelings differ in length");
    if (a.empty()) throw Error(ErrorKind::EmptyData, "empty labelings");
    const double n = static_cast<double>(a.size());
    std::map<int, double> ca;
    std::map<int, double> cb;
    std::map<std::pair<int, int>, double> joint;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ca[a[i]] += 1.0;
        cb[b[i]] += 1.0;
        joint[{a[i], b[i]}] += 1.0;
    }
    const double ha = entropy(ca, n);
    const double hb = entropy(cb, n);
    if (ha <= 0.0 || hb <= 0.0) return 0.0;
    double mi = 0.0;
    for (const auto& [key, c] : joint) {
        mi += (c / n) * std::log(c * n / (ca[key.first] * cb[key.second]));
    }
    return std::clamp(mi / ((ha + hb) / 2.0), 0.0, 1.0);
}

PcaModel pca(const Eigen::MatrixXd& data) {
    if (data.rows() < 2) throw Error(ErrorKind::EmptyData, "PCA needs at least two rows");
    PcaModel model;
    model.standardization = standardize(data);
    const Eigen::MatrixXd& z = model.standardization.data;
    const Eigen::MatrixXd cov = z.transpose() * z / static_cast<double>(z.rows());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw Error(ErrorKind::NumericFailure, "eigendecomposition failed");

    const auto p = cov.rows();
    model.components.resize(p, p);
    model.eigenvalues.resize(p);
    for (Eigen::Index c = 0; c < p; ++c) {
        // Eigen sorts ascending.
        const Eigen::Index src = p - 1 - c;
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        Eigen::Index pivot = 0;
        v.cwiseAbs().maxCoeff(&pivot);
        if (v(pivot) < 0.0) v = -v;
        model.components.col(c) = v;
        model.eigenvalues(c) = std::max(0.0, solver.eigenvalues()(src));
    }
    model.explained_variance_ratio = model.eigenvalues / model.eigenvalues.sum();
    return model;
}

Eigen::MatrixXd project(const PcaModel& model, const Eigen::MatrixXd& data, std::size_t n_components) {
    const auto& s = model.standardization;
    const auto m = std::min<Eigen::Index>(static_cast<Eigen::Index>(n_components), model.components.cols());
    Eigen::MatrixXd z(data.rows(), static_cast<Eigen::Index>(s.kept.size()));
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        z.col(j) = (data.col(static_cast<Eigen::Index>(s.kept[static_cast<std::size_t>(j)])).array() - s.mean(j)) /
                   s.scale(j);
    }
    return z * model.components.leftCols(m);
}

Eigen::MatrixXd reconstruct(const PcaModel& model, const Eigen::MatrixXd& scores) {
    const auto& s = model.standardization;
    const Eigen::MatrixXd z = scores * model.components.leftCols(scores.cols()).transpose();
    const auto width = static_cast<Eigen::Index>(s.kept.size() + s.dropped.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(scores.rows(), width);
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        out.col(static_cast<Eigen::Index>(s.kept[static_cast<std::size_t>(j)])) =
            z.col(j).array() * s.scale(j) + s.mean(j);
    }
    return out;
}

ClusterScan elbow_scan(const Eigen::MatrixXd& data, std::span<const int> league_labels,
                       std::span<const std::size_t> k_values, std::uint64_t seed, bool with_pca,
                       std::size_t n_components) {
    if (league_labels.size() != static_cast<std::size_t>(data.rows())) {
        throw Error(ErrorKind::LengthMismatch, "league labels do not match data rows");
    }
    Eigen::MatrixXd input;
    if (with_pca) {
        const PcaModel model = pca(data);
        input = project(model, data, n_components);
    } else {
        input = standardize(data).data;
    }
    ClusterScan scan;
    scan.with_pca = with_pca;
    for (const std::size_t k : k_values) {
        const auto fit = kmeans(input, k, derive_seed(seed, k));
        ScanRow row;
        row.k = k;
        row.wcss = fit.wcss;
        row.silhouette = silhouette(input, fit.assignments);
        row.nmi = nmi(fit.assignments, league_labels);
        row.assignments = fit.assignments;
        scan.rows.push_back(std::move(row));
    }
    return scan;
}

std::string scan_csv(const std::vector<ClusterScan>& scans) {
    std::string out = "k,wcss,silhouette,nmi,with_pca\n";
    for (const auto& scan : scans) {
        for (const auto& row : scan.rows) {
            out += fmt::format("{},{},{},{},{}\n", row.k, io::format_double(row.wcss),
                               io::format_double(row.silhouette), io::format_double(row.nmi),
                               scan.with_pca ? "true" : "false");
        }
    }
    return out;
}

std::string pca_csv(const PcaModel& model) {
    std::string out = "component,explained_ratio,cumulative_ratio\n";
    double cumulative = 0.0;
    for (Eigen::Index c = 0; c < model.explained_variance_ratio.size(); ++c) {
        cumulative += model.explained_variance_ratio(c);
        out += fmt::format("{},{},{}\n", c + 1, io::format_double(model.explained_variance_ratio(c)),
                           io::format_double(cumulative));
    }
    return out;
}

}  // namespace passnet
