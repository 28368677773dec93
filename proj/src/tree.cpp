#include "passnet/tree.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "passnet/error.hpp"

namespace passnet {

namespace {

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;  // lower is better
};

// Criterion hooks: `accumulate` moves one row from right to left; `score`
// evaluates the current partition.
class GiniCriterion {
public:
    GiniCriterion(std::span<const int> labels, int n_classes)
        : labels_(labels), total_(n_classes, 0.0), left_(n_classes, 0.0) {}

    void reset(std::span<const std::size_t> rows) {
        std::fill(total_.begin(), total_.end(), 0.0);
        for (const auto r : rows) total_[labels_[r]] += 1.0;
        n_ = static_cast<double>(rows.size());
        clear_left();
    }
    void clear_left() {
        std::fill(left_.begin(), left_.end(), 0.0);
        n_left_ = 0.0;
    }
    void accumulate(std::size_t row) {
        left_[labels_[row]] += 1.0;
        n_left_ += 1.0;
    }
    // Weighted child impurity n_L * G_L + n_R * G_R.
    double score() const {
        const double n_right = n_ - n_left_;
        double sq_left = 0.0;
        double sq_right = 0.0;
        for (std::size_t c = 0; c < total_.size(); ++c) {
            sq_left += left_[c] * left_[c];
            const double right = total_[c] - left_[c];
            sq_right += right * right;
        }
        const double gini_left = n_left_ > 0 ? n_left_ - sq_left / n_left_ : 0.0;
        const double gini_right = n_right > 0 ? n_right - sq_right / n_right : 0.0;
        return gini_left + gini_right;
    }
    bool pure() const {
        return std::count_if(total_.begin(), total_.end(), [](double c) { return c > 0; }) <= 1;
    }
    std::vector<double> leaf() const {
        std::vector<double> dist(total_.size());
        for (std::size_t c = 0; c < total_.size(); ++c) dist[c] = total_[c] / n_;
        return dist;
    }

private:
    std::span<const int> labels_;
    std::vector<double> total_;
    std::vector<double> left_;
    double n_ = 0.0;
    double n_left_ = 0.0;
};

class SquaredErrorCriterion {
public:
    SquaredErrorCriterion(std::span<const double> residuals, std::span<const double> hessians)
        : residuals_(residuals), hessians_(hessians) {}

    void reset(std::span<const std::size_t> rows) {
        sum_ = 0.0;
        sum_sq_ = 0.0;
        hess_ = 0.0;
        for (const auto r : rows) {
            sum_ += residuals_[r];
            sum_sq_ += residuals_[r] * residuals_[r];
            hess_ += hessians_[r];
        }
        n_ = static_cast<double>(rows.size());
        clear_left();
    }
    void clear_left() {
        sum_left_ = 0.0;
        n_left_ = 0.0;
    }
    void accumulate(std::size_t row) {
        sum_left_ += residuals_[row];
        n_left_ += 1.0;
    }
    // Child SSE up to the constant sum of squares.
    double score() const {
        const double n_right = n_ - n_left_;
        const double sum_right = sum_ - sum_left_;
        double gain = 0.0;
        if (n_left_ > 0) gain += sum_left_ * sum_left_ / n_left_;
        if (n_right > 0) gain += sum_right * sum_right / n_right;
        return sum_sq_ - gain;
    }
    bool pure() const { return n_ <= 1.0 || sum_sq_ - sum_ * sum_ / n_ <= 1e-24; }
    std::vector<double> leaf() const {
        return {std::abs(hess_) > 1e-12 ? sum_ / hess_ : 0.0};
    }

private:
    std::span<const double> residuals_;
    std::span<const double> hessians_;
    double sum_ = 0.0;
    double sum_sq_ = 0.0;
    double hess_ = 0.0;
    double n_ = 0.0;
    double sum_left_ = 0.0;
    double n_left_ = 0.0;
};

template <class Criterion>
class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& x, Criterion criterion, const TreeParams& params, Rng* rng)
        : x_(x), criterion_(std::move(criterion)), params_(params), rng_(rng) {
        features_.resize(static_cast<std::size_t>(x.cols()));
        std::iota(features_.begin(), features_.end(), 0);
    }

    DecisionTree build(std::span<const std::size_t> rows) {
        std::vector<std::size_t> work(rows.begin(), rows.end());
        grow(work, 0);
        return DecisionTree(std::move(nodes_));
    }

private:
    int grow(std::span<std::size_t> rows, int depth) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        criterion_.reset(rows);
        nodes_[id].value = criterion_.leaf();

        const std::size_t min_leaf = std::max<std::size_t>(params_.min_leaf, 1);
        if (depth >= params_.max_depth || rows.size() < 2 * min_leaf || criterion_.pure()) {
            return id;
        }
        const Split split = best_split(rows, min_leaf);
        if (split.feature < 0) return id;

        const auto middle = std::stable_partition(rows.begin(), rows.end(), [&](std::size_t r) {
            return x_(static_cast<Eigen::Index>(r), split.feature) <= split.threshold;
        });
        const auto n_left = static_cast<std::size_t>(middle - rows.begin());

        nodes_[id].feature = split.feature;
        nodes_[id].threshold = split.threshold;
        nodes_[id].value.clear();
        const int left = grow(rows.subspan(0, n_left), depth + 1);
        const int right = grow(rows.subspan(n_left), depth + 1);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    std::vector<std::size_t> candidate_features() {
        const std::size_t p = features_.size();
        const std::size_t m = params_.features_per_split == 0 ? p : std::min(params_.features_per_split, p);
        if (m == p || rng_ == nullptr) return features_;
        std::vector<std::size_t> pool = features_;
        for (std::size_t i = 0; i < m; ++i) {
            std::swap(pool[i], pool[i + rng_->index(p - i)]);
        }
        pool.resize(m);
        return pool;
    }

    Split best_split(std::span<const std::size_t> rows, std::size_t min_leaf) {
        Split best;
        std::vector<std::size_t> sorted(rows.begin(), rows.end());
        for (const std::size_t f : candidate_features()) {
            const auto col = static_cast<Eigen::Index>(f);
            std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
                return x_(static_cast<Eigen::Index>(a), col) < x_(static_cast<Eigen::Index>(b), col);
            });
            criterion_.clear_left();
            for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
                criterion_.accumulate(sorted[i]);
                const double here = x_(static_cast<Eigen::Index>(sorted[i]), col);
                const double next = x_(static_cast<Eigen::Index>(sorted[i + 1]), col);
                if (i + 1 < min_leaf || sorted.size() - (i + 1) < min_leaf || !(here < next)) {
                    continue;
                }
                const double score = criterion_.score();
                if (best.feature < 0 || score < best.score - 1e-12) {
                    best.feature = static_cast<int>(f);
                    best.score = score;
                    best.threshold = here + (next - here) / 2.0;
                    // Midpoint can round up to `next` for adjacent doubles.
                    if (!(best.threshold < next)) best.threshold = here;
                }
            }
        }
        return best;
    }

    const Eigen::MatrixXd& x_;
    Criterion criterion_;
    TreeParams params_;
    Rng* rng_;
    std::vector<std::size_t> features_;
    std::vector<TreeNode> nodes_;
};

}  // namespace

const std::vector<double>& DecisionTree::leaf_value(
    const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    std::size_t i = 0;
    while (!nodes_[i].is_leaf()) {
        const auto& node = nodes_[i];
        i = static_cast<std::size_t>(row(node.feature) <= node.threshold ? node.left : node.right);
    }
    return nodes_[i].value;
}

int DecisionTree::depth() const {
    std::vector<int> depth(nodes_.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        deepest = std::max(deepest, depth[i]);
        if (!nodes_[i].is_leaf()) {
            depth[static_cast<std::size_t>(nodes_[i].left)] = depth[i] + 1;
            depth[static_cast<std::size_t>(nodes_[i].right)] = depth[i] + 1;
        }
    }
    return deepest;
}

DecisionTree fit_classification_tree(const Eigen::MatrixXd& x, std::span<const int> labels,
                                     int n_classes, std::span<const std::size_t> rows,
                                     const TreeParams& params, Rng& rng) {
    if (rows.empty()) throw Error(ErrorKind::EmptyData, "cannot fit a tree on zero rows");
    TreeBuilder builder(x, GiniCriterion(labels, n_classes), params, &rng);
    return builder.build(rows);
}

DecisionTree fit_regression_tree(const Eigen::MatrixXd& x, std::span<const double> residuals,
                                 std::span<const double> hessians,
                                 std::span<const std::size_t> rows, const TreeParams& params) {
    if (rows.empty()) throw Error(ErrorKind::EmptyData, "cannot fit a tree on zero rows");
    TreeBuilder builder(x, SquaredErrorCriterion(residuals, hessians), params, nullptr);
    return builder.build(rows);
}

nlohmann::json to_json(const DecisionTree& tree) {
    // Nested node records, children inline.
    const auto& nodes = tree.nodes();
    const std::function<nlohmann::json(std::size_t)> emit = [&](std::size_t i) -> nlohmann::json {
        const auto& n = nodes[i];
        if (n.is_leaf()) return {{"leaf", n.value}};
        return {{"feature", n.feature},
                {"threshold", n.threshold},
                {"left", emit(static_cast<std::size_t>(n.left))},
                {"right", emit(static_cast<std::size_t>(n.right))}};
    };
    return emit(0);
}

DecisionTree tree_from_json(const nlohmann::json& doc) {
    std::vector<TreeNode> nodes;
    const std::function<int(const nlohmann::json&)> read = [&](const nlohmann::json& j) -> int {
        const int id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        if (j.contains("leaf")) {
            nodes[id].value = j.at("leaf").get<std::vector<double>>();
            return id;
        }
        nodes[id].feature = j.at("feature").get<int>();
        nodes[id].threshold = j.at("threshold").get<double>();
        const int left = read(j.at("left"));
        const int right = read(j.at("right"));
        nodes[id].left = left;
        nodes[id].right = right;
        return id;
    };
    try {
        read(doc);
    } catch (const nlohmann::json::exception& err) {
        throw Error(ErrorKind::MalformedInput, std::string("bad tree JSON: ") + err.what());
    }
    return DecisionTree(std::move(nodes));
}

}  // namespace passnet
