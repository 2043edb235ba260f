#pragma once

// Squared-error gradient boosting with depth-limited regression trees.
//
// Split candidates are quantile bin edges of each standardized feature,
// computed once per fit (at most `max_bins` bins per feature); node split
// search accumulates per-bin target sums, so a tree costs O(rows * depth).

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "amerlsm/error.hpp"
#include "amerlsm/regressors/standardizer.hpp"

namespace amerlsm {

struct BoostedTreesSpec {
    int estimators = 50;
    int max_depth = 3;
    double learning_rate = 0.1;
    /// Minimum number of training rows in each leaf.
    int min_leaf = 1;
    int max_bins = 256;

    void validate() const {
        require(estimators >= 1, "BoostedTreesSpec: estimators must be >= 1");
        require(max_depth >= 1, "BoostedTreesSpec: max_depth must be >= 1");
        require(learning_rate > 0.0 && learning_rate <= 1.0,
                "BoostedTreesSpec: learning_rate must be in (0, 1]");
        require(min_leaf >= 1, "BoostedTreesSpec: min_leaf must be >= 1");
        require(max_bins >= 2, "BoostedTreesSpec: max_bins must be >= 2");
    }
};

/// Per-feature bin edges and the bin index of every training row.
/// Row r of feature f falls in bin b iff edges[f][b-1] < x <= edges[f][b].
struct FeatureBins {
    std::vector<std::vector<double>> edges;
    std::vector<std::vector<std::uint16_t>> bin_of_row;

    static FeatureBins build(const Eigen::MatrixXd& x, int max_bins) {
        FeatureBins bins;
        const auto n = static_cast<std::size_t>(x.rows());
        for (Eigen::Index f = 0; f < x.cols(); ++f) {
            std::vector<double> sorted(x.col(f).data(), x.col(f).data() + x.rows());
            std::sort(sorted.begin(), sorted.end());
            std::vector<double> edges;
            for (int b = 1; b < max_bins; ++b) {
                const std::size_t k = std::min(n - 1, b * n / static_cast<std::size_t>(max_bins));
                const double lo = sorted[k - (k > 0 ? 1 : 0)];
                const double hi = sorted[k];
                if (lo < hi) {
                    const double edge = 0.5 * (lo + hi);
                    if (edges.empty() || edges.back() < edge) {
                        edges.push_back(edge);
                    }
                } else if (k + 1 < n) {
                    // k sits inside a run of ties; cut after the run
                    const auto run_end = std::upper_bound(sorted.begin() + static_cast<std::ptrdiff_t>(k),
                                                          sorted.end(), hi);
                    if (run_end != sorted.end()) {
                        const double edge = 0.5 * (hi + *run_end);
                        if (edges.empty() || edges.back() < edge) {
                            edges.push_back(edge);
                        }
                    }
                }
            }
            std::vector<std::uint16_t> index(n);
            for (std::size_t r = 0; r < n; ++r) {
                const double value = x(static_cast<Eigen::Index>(r), f);
                index[r] = static_cast<std::uint16_t>(std::lower_bound(edges.begin(), edges.end(), value) -
                                                      edges.begin());
            }
            bins.edges.push_back(std::move(edges));
            bins.bin_of_row.push_back(std::move(index));
        }
        return bins;
    }
};

class RegressionTree {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0;
    };

    static RegressionTree fit(const FeatureBins& bins, const Eigen::VectorXd& target, int max_depth,
                              int min_leaf = 1) {
        RegressionTree tree;
        tree.min_leaf_ = static_cast<std::size_t>(min_leaf);
        std::vector<Eigen::Index> rows(static_cast<std::size_t>(target.size()));
        std::iota(rows.begin(), rows.end(), Eigen::Index{0});
        tree.grow(bins, target, rows, max_depth);
        return tree;
    }

    double predict_row(const Eigen::MatrixXd& x, Eigen::Index row) const {
        int node = 0;
        while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
            const Node& n = nodes_[static_cast<std::size_t>(node)];
            node = x(row, n.feature) <= n.threshold ? n.left : n.right;
        }
        return nodes_[static_cast<std::size_t>(node)].value;
    }

    const std::vector<Node>& nodes() const { return nodes_; }

private:
    struct Split {
        int feature = -1;
        std::size_t bin = 0;  // rows with bin index <= bin go left
        double gain = 0.0;
    };

    int grow(const FeatureBins& bins, const Eigen::VectorXd& target, std::vector<Eigen::Index>& rows,
             int depth_left) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        double sum = 0.0;
        for (Eigen::Index r : rows) {
            sum += target(r);
        }
        nodes_[static_cast<std::size_t>(id)].value = rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
        if (depth_left == 0 || rows.size() < 2 * min_leaf_) {
            return id;
        }

        const Split best = best_split(bins, target, rows, sum);
        if (best.feature < 0) {
            return id;
        }
        const auto& bin_of_row = bins.bin_of_row[static_cast<std::size_t>(best.feature)];
        std::vector<Eigen::Index> left_rows;
        std::vector<Eigen::Index> right_rows;
        for (Eigen::Index r : rows) {
            (bin_of_row[static_cast<std::size_t>(r)] <= best.bin ? left_rows : right_rows).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        const int left = grow(bins, target, left_rows, depth_left - 1);
        const int right = grow(bins, target, right_rows, depth_left - 1);
        Node& node = nodes_[static_cast<std::size_t>(id)];
        node.feature = best.feature;
        node.threshold = bins.edges[static_cast<std::size_t>(best.feature)][best.bin];
        node.left = left;
        node.right = right;
        return id;
    }

    Split best_split(const FeatureBins& bins, const Eigen::VectorXd& target, const std::vector<Eigen::Index>& rows,
                     double total) const {
        Split best;
        const double n = static_cast<double>(rows.size());
        const double parent_score = total * total / n;
        for (std::size_t f = 0; f < bins.edges.size(); ++f) {
            const std::size_t bin_count = bins.edges[f].size() + 1;
            if (bin_count < 2) {
                continue;
            }
            std::vector<double> bin_sum(bin_count, 0.0);
            std::vector<std::size_t> bin_rows(bin_count, 0);
            for (Eigen::Index r : rows) {
                const std::size_t b = bins.bin_of_row[f][static_cast<std::size_t>(r)];
                bin_sum[b] += target(r);
                ++bin_rows[b];
            }
            double left_sum = 0.0;
            std::size_t left_count = 0;
            for (std::size_t b = 0; b + 1 < bin_count; ++b) {
                left_sum += bin_sum[b];
                left_count += bin_rows[b];
                const std::size_t right_count = rows.size() - left_count;
                if (bin_rows[b] == 0 || left_count < min_leaf_ || right_count < min_leaf_) {
                    continue;
                }
                const double left_n = static_cast<double>(left_count);
                const double right_n = static_cast<double>(right_count);
                const double right_sum = total - left_sum;
                const double gain = left_sum * left_sum / left_n + right_sum * right_sum / right_n - parent_score;
                if (gain > best.gain * (1.0 + 1e-12) + 1e-14) {
                    best = {static_cast<int>(f), b, gain};
                }
            }
        }
        return best;
    }

    std::vector<Node> nodes_;
    std::size_t min_leaf_ = 1;
};

struct BoostedTreesModel {
    BoostedTreesSpec spec;
    Standardizer standardizer;
    double initial = 0.0;
    std::vector<RegressionTree> trees;
    /// Training MSE after initialization (entry 0) and after each round.
    std::vector<double> training_mse;

    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const {
        const Eigen::MatrixXd z = standardizer.apply(x);
        Eigen::VectorXd out = Eigen::VectorXd::Constant(z.rows(), initial);
        for (const auto& tree : trees) {
            for (Eigen::Index r = 0; r < z.rows(); ++r) {
                out(r) += spec.learning_rate * tree.predict_row(z, r);
            }
        }
        return out;
    }
};

inline BoostedTreesModel fit_boosted_trees(const BoostedTreesSpec& spec, const Eigen::MatrixXd& x,
                                           const Eigen::VectorXd& y) {
    spec.validate();
    BoostedTreesModel model;
    model.spec = spec;
    model.standardizer = Standardizer::fit(x);
    const Eigen::MatrixXd z = model.standardizer.apply(x);
    const FeatureBins bins = FeatureBins::build(z, spec.max_bins);
    model.initial = y.mean();

    Eigen::VectorXd fitted = Eigen::VectorXd::Constant(y.size(), model.initial);
    Eigen::VectorXd residual = y - fitted;
    model.training_mse.push_back(residual.squaredNorm() / static_cast<double>(y.size()));
    model.trees.reserve(static_cast<std::size_t>(spec.estimators));
    for (int round = 0; round < spec.estimators; ++round) {
        RegressionTree tree = RegressionTree::fit(bins, residual, spec.max_depth, spec.min_leaf);
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
            fitted(r) += spec.learning_rate * tree.predict_row(z, r);
        }
        residual = y - fitted;
        model.training_mse.push_back(residual.squaredNorm() / static_cast<double>(y.size()));
        model.trees.push_back(std::move(tree));
    }
    return model;
}

}  // namespace amerlsm
