/*
 * Copyright (c) The epsdiag Project Contributors
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "epsdiag/errors.hpp"
#include "epsdiag/features.hpp"
#include "epsdiag/linalg.hpp"
#include "epsdiag/rng.hpp"
#include "epsdiag/sysid.hpp"

namespace epsdiag {

namespace detail {
inline std::size_t class_index(const std::vector<FaultKind>& order, FaultKind f) {
    for (std::size_t i = 0; i < order.size(); ++i)
        if (order[i] == f) return i;
    throw DataError(std::string("label ") + fault_tag(f) + " not in class order");
}

inline Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw DataError("empty feature set");
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size()) throw ShapeError("ragged feature rows");
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    }
    return m;
}
} // namespace detail

// ---------------------------------------------------------------------------
// Confusion matrix
// ---------------------------------------------------------------------------

struct ConfusionMatrix {
    std::vector<std::vector<std::size_t>> counts;  // rows true, columns predicted
    std::vector<FaultKind> class_order;

    double overall_accuracy() const {
        std::size_t diag = 0, total = 0;
        for (std::size_t i = 0; i < counts.size(); ++i)
            for (std::size_t j = 0; j < counts.size(); ++j) {
                total += counts[i][j];
                if (i == j) diag += counts[i][j];
            }
        return total ? static_cast<double>(diag) / static_cast<double>(total) : 0.0;
    }

    std::vector<double> per_class_accuracy() const {
        std::vector<double> out(counts.size(), 0.0);
        for (std::size_t i = 0; i < counts.size(); ++i) {
            std::size_t row = 0;
            for (std::size_t j = 0; j < counts.size(); ++j) row += counts[i][j];
            if (row) out[i] = static_cast<double>(counts[i][i]) / static_cast<double>(row);
        }
        return out;
    }
};

inline ConfusionMatrix confusion_matrix(const std::vector<FaultKind>& true_labels,
                                        const std::vector<FaultKind>& predicted_labels,
                                        const std::vector<FaultKind>& class_order) {
    if (true_labels.size() != predicted_labels.size())
        throw ShapeError("confusion_matrix: label sequences differ in length");
    ConfusionMatrix cm;
    cm.class_order = class_order;
    cm.counts.assign(class_order.size(), std::vector<std::size_t>(class_order.size(), 0));
    for (std::size_t k = 0; k < true_labels.size(); ++k) {
        const std::size_t i = detail::class_index(class_order, true_labels[k]);
        const std::size_t j = detail::class_index(class_order, predicted_labels[k]);
        cm.counts[i][j]++;
    }
    return cm;
}

/// Aligned plain-text rendering (rows true, columns predicted).
inline std::string render_confusion(const ConfusionMatrix& cm) {
    std::size_t w = 8;
    for (FaultKind f : cm.class_order) w = std::max(w, std::string(fault_tag(f)).size() + 2);
    auto pad = [&](const std::string& s) {
        std::string out = s;
        while (out.size() < w) out = ' ' + out;
        return out;
    };
    std::string out = pad("true\\pred");
    for (FaultKind f : cm.class_order) out += pad(fault_tag(f));
    out += '\n';
    for (std::size_t i = 0; i < cm.counts.size(); ++i) {
        out += pad(fault_tag(cm.class_order[i]));
        for (std::size_t j = 0; j < cm.counts.size(); ++j)
            out += pad(std::to_string(cm.counts[i][j]));
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// MLP classifier (one-hot targets on the LM-trained regressor)
// ---------------------------------------------------------------------------

struct MlpClassifier {
    MlpRegressor core;
    std::vector<FaultKind> class_order;
};

inline MlpClassifier mlp_classifier_train(const LabeledDataset& data, const TrainConfig& config) {
    validate(data);
    std::vector<std::size_t> per_class(data.class_order.size(), 0);
    for (FaultKind l : data.labels) per_class[detail::class_index(data.class_order, l)]++;
    std::size_t populated = 0;
    for (std::size_t c : per_class)
        if (c > 0) ++populated;
    if (populated < 2) throw DataError("mlp_classifier_train: need at least 2 classes");
    for (std::size_t c = 0; c < per_class.size(); ++c)
        if (per_class[c] > 0 && per_class[c] < 10)
            throw DataError(std::string("mlp_classifier_train: class ") +
                            fault_tag(data.class_order[c]) + " has fewer than 10 samples");

    const Matrix x = detail::to_matrix(data.features);
    Matrix t(data.labels.size(), data.class_order.size(), 0.0);
    for (std::size_t r = 0; r < data.labels.size(); ++r)
        t(r, detail::class_index(data.class_order, data.labels[r])) = 1.0;

    TrainResult res = train_lm(x, t, config);
    return MlpClassifier{std::move(res.model), data.class_order};
}

/// Argmax over the network outputs; exact ties resolve to the lowest
/// class index.
inline FaultKind mlp_classifier_predict_one(const MlpClassifier& clf, const std::vector<double>& x) {
    if (x.size() != clf.core.n_in) throw ShapeError("mlp_classifier_predict: feature width mismatch");
    std::vector<double> y(clf.core.n_out);
    predict_row(clf.core, x.data(), y.data());
    std::size_t best = 0;
    for (std::size_t i = 1; i < y.size(); ++i)
        if (y[i] > y[best]) best = i;
    return clf.class_order[best];
}

inline std::vector<FaultKind> mlp_classifier_predict(const MlpClassifier& clf,
                                                     const std::vector<std::vector<double>>& rows) {
    std::vector<FaultKind> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(mlp_classifier_predict_one(clf, r));
    return out;
}

// ---------------------------------------------------------------------------
// KNN (lazy, Euclidean)
// ---------------------------------------------------------------------------

struct KnnClassifier {
    std::size_t k = 3;
    std::vector<std::vector<double>> points;
    std::vector<FaultKind> labels;
    std::vector<FaultKind> class_order;
};

/// Majority vote among the k nearest stored points. Distance ties break
/// by stored order; vote ties by smallest summed distance, then lowest
/// class index.
inline FaultKind knn_predict(const KnnClassifier& clf, const std::vector<double>& query) {
    if (clf.points.empty()) throw StateError("knn_predict: empty point store");
    if (clf.k < 1 || clf.k > clf.points.size())
        throw StateError("knn_predict: k out of range for stored points");
    if (query.size() != clf.points[0].size()) throw ShapeError("knn_predict: feature width mismatch");

    std::vector<std::pair<double, std::size_t>> dist(clf.points.size());
    for (std::size_t i = 0; i < clf.points.size(); ++i) {
        double d2 = 0.0;
        for (std::size_t c = 0; c < query.size(); ++c) {
            const double d = query[c] - clf.points[i][c];
            d2 += d * d;
        }
        dist[i] = {std::sqrt(d2), i};
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(clf.k), dist.end());

    std::map<FaultKind, std::pair<std::size_t, double>> votes;  // count, summed distance
    for (std::size_t i = 0; i < clf.k; ++i) {
        auto& v = votes[clf.labels[dist[i].second]];
        v.first++;
        v.second += dist[i].first;
    }
    FaultKind best = clf.labels[dist[0].second];
    std::size_t best_count = 0;
    double best_sum = std::numeric_limits<double>::infinity();
    std::size_t best_index = std::numeric_limits<std::size_t>::max();
    for (const auto& [label, v] : votes) {
        const std::size_t idx = detail::class_index(clf.class_order, label);
        const bool wins = v.first > best_count ||
                          (v.first == best_count &&
                           (v.second < best_sum || (v.second == best_sum && idx < best_index)));
        if (wins) {
            best = label;
            best_count = v.first;
            best_sum = v.second;
            best_index = idx;
        }
    }
    return best;
}

inline std::vector<FaultKind> knn_predict(const KnnClassifier& clf,
                                          const std::vector<std::vector<double>>& rows) {
    std::vector<FaultKind> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(knn_predict(clf, r));
    return out;
}

// ---------------------------------------------------------------------------
// ID3 decision tree on continuous features (midpoint threshold splits,
// base-2 entropy gain)
// ---------------------------------------------------------------------------

struct DecisionTree {
    struct Node {
        bool leaf = true;
        FaultKind label = FaultKind::Healthy;
        std::size_t feature = 0;
        double threshold = 0.0;
        std::size_t left = 0;
        std::size_t right = 0;
    };
    std::vector<Node> nodes;  // node 0 is the root
    std::vector<FaultKind> class_order;
};

namespace detail {
inline double entropy_bits(const std::vector<std::size_t>& counts, std::size_t total) {
    if (total == 0) return 0.0;
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return h;
}

struct SplitChoice {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

/// Best (feature, threshold) by information gain over midpoints between
/// consecutive distinct sorted values. Gain ties resolve to the lowest
/// feature index, then the lowest threshold.
inline SplitChoice best_split(const std::vector<std::vector<double>>& x,
                              const std::vector<std::size_t>& label_idx,
                              const std::vector<std::size_t>& rows, std::size_t n_classes,
                              std::size_t min_leaf) {
    SplitChoice best;
    const std::size_t n = rows.size();
    std::vector<std::size_t> parent_counts(n_classes, 0);
    for (std::size_t r : rows) parent_counts[label_idx[r]]++;
    const double parent_h = entropy_bits(parent_counts, n);

    const std::size_t n_features = x[rows[0]].size();
    std::vector<std::pair<double, std::size_t>> sorted(n);
    for (std::size_t f = 0; f < n_features; ++f) {
        for (std::size_t i = 0; i < n; ++i) sorted[i] = {x[rows[i]][f], label_idx[rows[i]]};
        std::sort(sorted.begin(), sorted.end());

        std::vector<std::size_t> left_counts(n_classes, 0);
        std::size_t n_left = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left_counts[sorted[i].second]++;
            ++n_left;
            if (sorted[i].first == sorted[i + 1].first) continue;
            const std::size_t n_right = n - n_left;
            if (n_left < min_leaf || n_right < min_leaf) continue;

            std::vector<std::size_t> right_counts(n_classes);
            for (std::size_t c = 0; c < n_classes; ++c)
                right_counts[c] = parent_counts[c] - left_counts[c];
            const double h = (static_cast<double>(n_left) * entropy_bits(left_counts, n_left) +
                              static_cast<double>(n_right) * entropy_bits(right_counts, n_right)) /
                             static_cast<double>(n);
            const double gain = parent_h - h;
            const double threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
            // strict improvement only, so ties keep the lowest feature
            // index and threshold (scan order)
            const bool better = best.found ? (gain > best.gain) : (gain > 0.0);
            if (better) best = {true, f, threshold, gain};
        }
    }
    return best;
}
} // namespace detail

/// Recursive binary ID3: stops on purity, depth cap, or min_leaf.
/// Leaf labels are the majority class; ties go to the lowest class
/// index.
inline DecisionTree id3_train(const LabeledDataset& data, std::size_t max_depth = 32,
                              std::size_t min_leaf = 1) {
    validate(data);
    if (data.features.empty()) throw DataError("id3_train: empty dataset");
    if (min_leaf < 1) min_leaf = 1;

    DecisionTree tree;
    tree.class_order = data.class_order;
    const std::size_t n_classes = data.class_order.size();
    std::vector<std::size_t> label_idx(data.labels.size());
    for (std::size_t i = 0; i < data.labels.size(); ++i)
        label_idx[i] = detail::class_index(data.class_order, data.labels[i]);

    struct Work {
        std::vector<std::size_t> rows;
        std::size_t node;
        std::size_t depth;
    };

    auto majority = [&](const std::vector<std::size_t>& rows) {
        std::vector<std::size_t> counts(n_classes, 0);
        for (std::size_t r : rows) counts[label_idx[r]]++;
        std::size_t best = 0;
        for (std::size_t c = 1; c < n_classes; ++c)
            if (counts[c] > counts[best]) best = c;
        return data.class_order[best];
    };

    std::vector<std::size_t> all(data.features.size());
    std::iota(all.begin(), all.end(), 0);
    tree.nodes.push_back({});
    std::vector<Work> stack{{std::move(all), 0, 0}};

    while (!stack.empty()) {
        Work w = std::move(stack.back());
        stack.pop_back();
        DecisionTree::Node& node = tree.nodes[w.node];
        node.leaf = true;
        node.label = majority(w.rows);

        bool pure = true;
        for (std::size_t r : w.rows)
            if (label_idx[r] != label_idx[w.rows[0]]) {
                pure = false;
                break;
            }
        if (pure || w.depth >= max_depth || w.rows.size() < 2 * min_leaf) continue;

        const auto split = detail::best_split(data.features, label_idx, w.rows, n_classes, min_leaf);
        if (!split.found || split.gain <= 0.0) continue;

        std::vector<std::size_t> left, right;
        for (std::size_t r : w.rows) {
            if (data.features[r][split.feature] < split.threshold)
                left.push_back(r);
            else
                right.push_back(r);
        }
        if (left.empty() || right.empty()) continue;

        const std::size_t li = tree.nodes.size();
        tree.nodes.push_back({});
        const std::size_t ri = tree.nodes.size();
        tree.nodes.push_back({});
        DecisionTree::Node& parent = tree.nodes[w.node];  // re-fetch, vector may have grown
        parent.leaf = false;
        parent.feature = split.feature;
        parent.threshold = split.threshold;
        parent.left = li;
        parent.right = ri;
        stack.push_back({std::move(right), ri, w.depth + 1});
        stack.push_back({std::move(left), li, w.depth + 1});
    }
    return tree;
}

/// Root-to-leaf descent; values below the threshold go left, values at
/// or above it go right.
inline FaultKind id3_predict_one(const DecisionTree& tree, const std::vector<double>& x) {
    std::size_t i = 0;
    while (!tree.nodes[i].leaf) {
        const auto& n = tree.nodes[i];
        if (n.feature >= x.size()) throw ShapeError("id3_predict: feature width mismatch");
        i = (x[n.feature] < n.threshold) ? n.left : n.right;
    }
    return tree.nodes[i].label;
}

inline std::vector<FaultKind> id3_predict(const DecisionTree& tree,
                                          const std::vector<std::vector<double>>& rows) {
    std::vector<FaultKind> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(id3_predict_one(tree, r));
    return out;
}

// ---------------------------------------------------------------------------
// PCA (covariance eigendecomposition, nearest projected class mean)
// ---------------------------------------------------------------------------

struct PcaModel {
    std::vector<double> mean;
    Matrix components;              // feature x component, orthonormal columns
    std::vector<double> eigenvalues;  // descending
    std::size_t n_components = 0;
};

/// Center, form C = (1/N) X Xt on the centered data, eigendecompose.
inline PcaModel pca_fit(const std::vector<std::vector<double>>& features, std::size_t n_components) {
    if (features.size() < 2) throw DataError("pca_fit: need at least 2 samples");
    const Matrix x = detail::to_matrix(features);
    for (double v : x.data())
        if (!std::isfinite(v)) throw DataError("pca_fit: non-finite input");
    const std::size_t n = x.rows(), m = x.cols();
    if (n_components < 1 || n_components > m)
        throw ShapeError("pca_fit: n_components out of range");

    PcaModel model;
    model.n_components = n_components;
    model.mean.assign(m, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) model.mean[c] += x(r, c);
    for (double& v : model.mean) v /= static_cast<double>(n);

    Matrix cov(m, m, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t a = 0; a < m; ++a) {
            const double da = x(r, a) - model.mean[a];
            for (std::size_t b = a; b < m; ++b) cov(a, b) += da * (x(r, b) - model.mean[b]);
        }
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a; b < m; ++b) {
            cov(a, b) /= static_cast<double>(n);
            cov(b, a) = cov(a, b);
        }

    EigenResult eig = jacobi_eigh(cov);
    model.eigenvalues.assign(eig.values.begin(), eig.values.begin() + static_cast<std::ptrdiff_t>(m));
    model.components = Matrix(m, n_components);
    for (std::size_t c = 0; c < n_components; ++c)
        for (std::size_t r = 0; r < m; ++r) model.components(r, c) = eig.vectors(r, c);
    model.eigenvalues.resize(n_components);
    return model;
}

/// y = Qt (x - mean) per sample.
inline std::vector<std::vector<double>> pca_project(const PcaModel& model,
                                                    const std::vector<std::vector<double>>& rows) {
    std::vector<std::vector<double>> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        if (r.size() != model.mean.size()) throw ShapeError("pca_project: feature width mismatch");
        std::vector<double> y(model.n_components, 0.0);
        for (std::size_t c = 0; c < model.n_components; ++c)
            for (std::size_t f = 0; f < r.size(); ++f)
                y[c] += model.components(f, c) * (r[f] - model.mean[f]);
        out.push_back(std::move(y));
    }
    return out;
}

struct PcaClassifier {
    PcaModel model;
    std::vector<FaultKind> class_order;
    std::vector<double> class_means_1d;  // projected onto the first component
};

inline PcaClassifier pca_classifier_train(const LabeledDataset& data, std::size_t n_components = 1) {
    validate(data);
    PcaClassifier clf;
    clf.model = pca_fit(data.features, n_components);
    clf.class_order = data.class_order;
    clf.class_means_1d.assign(data.class_order.size(), 0.0);
    std::vector<std::size_t> counts(data.class_order.size(), 0);
    const auto proj = pca_project(clf.model, data.features);
    for (std::size_t r = 0; r < proj.size(); ++r) {
        const std::size_t i = detail::class_index(data.class_order, data.labels[r]);
        clf.class_means_1d[i] += proj[r][0];
        counts[i]++;
    }
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) throw DataError("pca_classifier_train: empty class");
        clf.class_means_1d[i] /= static_cast<double>(counts[i]);
    }
    return clf;
}

/// Nearest projected class mean along the first component; ties go to
/// the lowest class index.
inline FaultKind pca_classify_one(const PcaClassifier& clf, const std::vector<double>& x) {
    const auto proj = pca_project(clf.model, {x});
    const double y = proj[0][0];
    std::size_t best = 0;
    double best_d = std::abs(y - clf.class_means_1d[0]);
    for (std::size_t i = 1; i < clf.class_means_1d.size(); ++i) {
        const double d = std::abs(y - clf.class_means_1d[i]);
        if (d < best_d) {
            best = i;
            best_d = d;
        }
    }
    return clf.class_order[best];
}

inline std::vector<FaultKind> pca_classify(const PcaClassifier& clf,
                                           const std::vector<std::vector<double>>& rows) {
    std::vector<FaultKind> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(pca_classify_one(clf, r));
    return out;
}

// ---------------------------------------------------------------------------
// Losses and model selection
// ---------------------------------------------------------------------------

using PredictFn = std::function<std::vector<FaultKind>(const std::vector<std::vector<double>>&)>;
using TrainerFn = std::function<PredictFn(const LabeledDataset&)>;

/// Misclassification fraction on the training data itself.
inline double resubstitution_loss(const PredictFn& predict, const LabeledDataset& data) {
    if (data.features.empty()) throw DataError("resubstitution_loss: empty dataset");
    const auto pred = predict(data.features);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] != data.labels[i]) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(data.features.size());
}

/// Stratified k-fold assignment: per-class seeded shuffle, dealt
/// round-robin. Throws when any class has fewer samples than folds.
inline std::vector<std::size_t> stratified_folds(const LabeledDataset& data, std::size_t k_folds,
                                                 std::uint64_t seed) {
    std::vector<std::size_t> fold(data.labels.size(), 0);
    for (std::size_t ci = 0; ci < data.class_order.size(); ++ci) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < data.labels.size(); ++i)
            if (data.labels[i] == data.class_order[ci]) rows.push_back(i);
        if (rows.empty()) continue;
        if (rows.size() < k_folds)
            throw DataError(std::string("kfold: class ") + fault_tag(data.class_order[ci]) +
                            " has fewer samples than folds");
        Rng rng(derive_seed(seed, "kfold", ci));
        for (std::size_t i = rows.size(); i > 1; --i)
            std::swap(rows[i - 1], rows[rng.next_u64() % i]);
        for (std::size_t i = 0; i < rows.size(); ++i) fold[rows[i]] = i % k_folds;
    }
    return fold;
}

/// Mean held-out misclassification over k stratified folds.
inline double kfold_loss(const TrainerFn& trainer, const LabeledDataset& data, std::size_t k_folds,
                         std::uint64_t seed) {
    validate(data);
    if (k_folds < 2) throw ConfigError("k_folds must be >= 2");
    if (k_folds > data.features.size()) throw ConfigError("k_folds exceeds sample count");
    const auto fold = stratified_folds(data, k_folds, seed);

    double total = 0.0;
    for (std::size_t f = 0; f < k_folds; ++f) {
        LabeledDataset train, test;
        train.class_order = test.class_order = data.class_order;
        train.feature_names = test.feature_names = data.feature_names;
        for (std::size_t i = 0; i < data.features.size(); ++i) {
            auto& dst = (fold[i] == f) ? test : train;
            dst.features.push_back(data.features[i]);
            dst.labels.push_back(data.labels[i]);
        }
        if (test.features.empty()) continue;
        const PredictFn predict = trainer(train);
        const auto pred = predict(test.features);
        std::size_t wrong = 0;
        for (std::size_t i = 0; i < pred.size(); ++i)
            if (pred[i] != test.labels[i]) ++wrong;
        total += static_cast<double>(wrong) / static_cast<double>(test.features.size());
    }
    return total / static_cast<double>(k_folds);
}

struct KnnSelection {
    std::size_t chosen_k = 3;
    struct Row {
        std::size_t k;
        double resubstitution;
        double kfold;
    };
    std::vector<Row> table;
};

/// Evaluate candidate neighbor counts and choose the k with the lowest
/// k-fold loss. Loss ties prefer the smallest k strictly greater than 2
/// (one or two neighbors over-fit the training data), else the smallest.
inline KnnSelection knn_select_k(const LabeledDataset& data, const std::vector<std::size_t>& k_candidates,
                                 std::size_t folds, std::uint64_t seed) {
    validate(data);
    if (k_candidates.empty()) throw ConfigError("knn_select_k: no candidates");

    KnnSelection sel;
    for (std::size_t k : k_candidates) {
        KnnClassifier full{k, data.features, data.labels, data.class_order};
        const double resub = resubstitution_loss(
            [&](const std::vector<std::vector<double>>& rows) { return knn_predict(full, rows); },
            data);
        const double kf = kfold_loss(
            [&](const LabeledDataset& train) -> PredictFn {
                KnnClassifier clf{std::min(k, train.features.size()), train.features, train.labels,
                                  train.class_order};
                return [clf](const std::vector<std::vector<double>>& rows) {
                    return knn_predict(clf, rows);
                };
            },
            data, folds, seed);
        sel.table.push_back({k, resub, kf});
    }

    double best_loss = std::numeric_limits<double>::infinity();
    for (const auto& row : sel.table) best_loss = std::min(best_loss, row.kfold);
    const double eps = 1e-12;
    std::size_t chosen = 0;
    bool found = false;
    for (const auto& row : sel.table) {  // smallest tied k above 2
        if (row.kfold <= best_loss + eps && row.k > 2 && (!found || row.k < chosen)) {
            chosen = row.k;
            found = true;
        }
    }
    if (!found) {
        for (const auto& row : sel.table)
            if (row.kfold <= best_loss + eps && (!found || row.k < chosen)) {
                chosen = row.k;
                found = true;
            }
    }
    sel.chosen_k = chosen;
    return sel;
}

} // namespace epsdiag
