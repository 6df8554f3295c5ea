#include "ctphish/classifiers/forest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

#include "ctphish/classifiers/rng.hpp"
#include "ctphish/errors.hpp"

namespace ctphish::classifiers {

void Matrix::push_row(std::span<const double> values) {
    if (rows == 0 && cols == 0) cols = values.size();
    if (values.size() != cols) throw DimensionMismatch("row width differs from matrix width");
    data.insert(data.end(), values.begin(), values.end());
    ++rows;
}

// ---------------------------------------------------------------------------
// tree

double DecisionTree::predict(std::span<const double> x) const {
    if (nodes_.empty()) throw UntrainedModel("empty tree");
    std::size_t i = 0;
    while (!nodes_[i].is_leaf()) {
        const auto& n = nodes_[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes_[i].value;
}

std::vector<double> DecisionTree::importances(std::size_t n_features) const {
    std::vector<double> imp(n_features, 0.0);
    for (const auto& n : nodes_) {
        if (n.is_leaf()) continue;
        const auto& l = nodes_[static_cast<std::size_t>(n.left)];
        const auto& r = nodes_[static_cast<std::size_t>(n.right)];
        imp[static_cast<std::size_t>(n.feature)] +=
            n.samples * n.impurity - l.samples * l.impurity - r.samples * r.impurity;
    }
    double total = std::accumulate(imp.begin(), imp.end(), 0.0);
    if (total > 0) {
        for (double& v : imp) v /= total;
    }
    return imp;
}

Json DecisionTree::to_json() const {
    Json feature = Json::array(), threshold = Json::array(), left = Json::array(), right = Json::array(),
         value = Json::array(), samples = Json::array(), impurity = Json::array();
    for (const auto& n : nodes_) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        value.push_back(n.value);
        samples.push_back(n.samples);
        impurity.push_back(n.impurity);
    }
    return Json{{"feature", feature}, {"threshold", threshold}, {"left", left},        {"right", right},
                {"value", value},     {"samples", samples},     {"impurity", impurity}};
}

DecisionTree DecisionTree::from_json(const Json& j) {
    auto feature = j.at("feature").get<std::vector<std::int32_t>>();
    auto threshold = j.at("threshold").get<std::vector<double>>();
    auto left = j.at("left").get<std::vector<std::int32_t>>();
    auto right = j.at("right").get<std::vector<std::int32_t>>();
    auto value = j.at("value").get<std::vector<double>>();
    auto samples = j.at("samples").get<std::vector<double>>();
    auto impurity = j.at("impurity").get<std::vector<double>>();
    std::size_t n = feature.size();
    if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n ||
        samples.size() != n || impurity.size() != n || n == 0) {
        throw ModelFormatError("tree arrays differ in length");
    }
    std::vector<TreeNode> nodes(n);
    for (std::size_t i = 0; i < n; ++i) {
        nodes[i] = {feature[i], threshold[i], left[i], right[i], value[i], samples[i], impurity[i]};
        if (!nodes[i].is_leaf()) {
            auto ok = [&](std::int32_t c) { return c > static_cast<std::int32_t>(i) && c < static_cast<std::int32_t>(n); };
            if (!ok(left[i]) || !ok(right[i])) throw ModelFormatError("tree child index out of range");
        }
        if (value[i] < 0 || value[i] > 1) throw ModelFormatError("leaf fraction outside [0,1]");
    }
    return DecisionTree(std::move(nodes));
}

// ---------------------------------------------------------------------------
// growing

namespace {

double gini(double pos, double total) {
    if (total <= 0) return 0.0;
    double p = pos / total;
    return 2.0 * p * (1.0 - p);
}

struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double decrease = -1.0;
};

// Prefers a larger decrease, then a lower feature index, then a lower threshold.
bool better(const Split& a, const Split& b) {
    if (!b.found) return a.found;
    if (a.decrease != b.decrease) return a.decrease > b.decrease;
    if (a.feature != b.feature) return a.feature < b.feature;
    return a.threshold < b.threshold;
}

class Grower {
public:
    Grower(const Matrix& x, const std::vector<int>& y, const ForestParams& p, std::uint64_t tree_index)
        : x_(x), y_(y), params_(p), rng_(p.seed, tree_index) {
        mtry_ = p.max_features ? std::min(p.max_features, x.cols)
                               : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(
                                                              static_cast<double>(x.cols)))));
        features_.resize(x.cols);
    }

    DecisionTree grow() {
        std::vector<std::size_t> sample(x_.rows);
        for (auto& s : sample) s = static_cast<std::size_t>(rng_.bounded(x_.rows));
        std::sort(sample.begin(), sample.end());
        build(sample);
        return DecisionTree(std::move(nodes_));
    }

private:
    std::int32_t build(std::vector<std::size_t>& idx) {
        auto id = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();
        double pos = 0;
        for (auto i : idx) pos += y_[i];
        double total = static_cast<double>(idx.size());
        {
            auto& node = nodes_.back();
            node.samples = total;
            node.value = total > 0 ? pos / total : 0.0;
            node.impurity = gini(pos, total);
        }
        if (pos == 0 || pos == total || idx.size() < params_.min_samples_split) return id;

        Split best = find_split(idx, pos);
        if (!best.found) return id;

        std::vector<std::size_t> left, right;
        for (auto i : idx) (x_.at(i, best.feature) <= best.threshold ? left : right).push_back(i);
        std::vector<std::size_t>().swap(idx);
        nodes_[static_cast<std::size_t>(id)].feature = static_cast<std::int32_t>(best.feature);
        nodes_[static_cast<std::size_t>(id)].threshold = best.threshold;
        auto l = build(left);
        auto r = build(right);
        nodes_[static_cast<std::size_t>(id)].left = l;
        nodes_[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    // Features are drawn without replacement in random order; constant ones
    // do not count towards mtry, so drawing continues past them.
    Split find_split(const std::vector<std::size_t>& idx, double pos) {
        std::iota(features_.begin(), features_.end(), std::size_t{0});
        Split best;
        std::size_t evaluated = 0;
        const double total = static_cast<double>(idx.size());
        const double parent = total * gini(pos, total);
        for (std::size_t drawn = 0; drawn < features_.size() && evaluated < mtry_; ++drawn) {
            auto j = drawn + static_cast<std::size_t>(rng_.bounded(features_.size() - drawn));
            std::swap(features_[drawn], features_[j]);
            std::size_t f = features_[drawn];

            column_.clear();
            for (auto i : idx) column_.emplace_back(x_.at(i, f), y_[i]);
            std::sort(column_.begin(), column_.end());
            if (column_.front().first == column_.back().first) continue;
            ++evaluated;

            double left_pos = 0;
            for (std::size_t k = 0; k + 1 < column_.size(); ++k) {
                left_pos += column_[k].second;
                double a = column_[k].first, b = column_[k + 1].first;
                if (a == b) continue;
                double nl = static_cast<double>(k + 1), nr = total - nl;
                double decrease = parent - nl * gini(left_pos, nl) - nr * gini(pos - left_pos, nr);
                double threshold = a + (b - a) / 2.0;
                if (threshold >= b) threshold = a;
                Split cand{true, f, threshold, decrease};
                if (better(cand, best)) best = cand;
            }
        }
        return best;
    }

    const Matrix& x_;
    const std::vector<int>& y_;
    const ForestParams& params_;
    CounterRng rng_;
    std::size_t mtry_ = 1;
    std::vector<std::size_t> features_;
    std::vector<std::pair<double, int>> column_;
    std::vector<TreeNode> nodes_;
};

}  // namespace

DecisionTree grow_tree(const Matrix& x, const std::vector<int>& labels, const ForestParams& params,
                       std::uint64_t tree_index) {
    return Grower(x, labels, params, tree_index).grow();
}

// ---------------------------------------------------------------------------
// forest

RandomForest::RandomForest(std::size_t n_features, std::vector<DecisionTree> trees)
    : n_features_(n_features), trees_(std::move(trees)) {
    for (const auto& t : trees_) {
        for (const auto& n : t.nodes()) {
            if (!n.is_leaf() && static_cast<std::size_t>(n.feature) >= n_features_) {
                throw ModelFormatError("node feature index exceeds dimension");
            }
        }
    }
}

RandomForest RandomForest::train(const Matrix& x, const std::vector<int>& labels, const ForestParams& params) {
    if (labels.size() != x.rows) throw DimensionMismatch("label count differs from sample count");
    if (x.cols == 0) throw DimensionMismatch("no features");
    if (params.n_trees == 0) throw std::invalid_argument("n_trees must be positive");
    std::size_t pos = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw std::invalid_argument("labels must be 0 or 1");
        pos += static_cast<std::size_t>(l);
    }
    if (pos == 0 || pos == labels.size()) throw EmptyClass("training data needs both labels");

    std::vector<DecisionTree> trees(params.n_trees);
    std::size_t threads = params.threads ? params.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, params.n_trees);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t t; (t = next.fetch_add(1)) < params.n_trees;) trees[t] = grow_tree(x, labels, params, t);
    };
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(work);
    }
    return RandomForest(x.cols, std::move(trees));
}

double RandomForest::score(std::span<const double> x) const {
    if (trees_.empty()) throw UntrainedModel("forest has no trees");
    if (x.size() != n_features_) {
        throw DimensionMismatch("vector has " + std::to_string(x.size()) + " values, model expects " +
                                std::to_string(n_features_));
    }
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.predict(x);
    return sum / static_cast<double>(trees_.size());
}

std::vector<double> RandomForest::feature_importances() const {
    if (trees_.empty()) throw UntrainedModel("forest has no trees");
    std::vector<double> total(n_features_, 0.0);
    for (const auto& t : trees_) {
        auto imp = t.importances(n_features_);
        for (std::size_t i = 0; i < n_features_; ++i) total[i] += imp[i];
    }
    double sum = std::accumulate(total.begin(), total.end(), 0.0);
    if (sum > 0) {
        for (double& v : total) v /= sum;
    }
    return total;
}

Json RandomForest::to_json() const {
    Json trees = Json::array();
    for (const auto& t : trees_) trees.push_back(t.to_json());
    return Json{{"n_features", n_features_}, {"trees", trees}};
}

RandomForest RandomForest::from_json(const Json& j) {
    std::vector<DecisionTree> trees;
    for (const auto& t : j.at("trees")) trees.push_back(DecisionTree::from_json(t));
    if (trees.empty()) throw ModelFormatError("forest has no trees");
    return RandomForest(j.at("n_features").get<std::size_t>(), std::move(trees));
}

}  // namespace ctphish::classifiers
