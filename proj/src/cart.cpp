#include "wsn/cart.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "wsn/error.hpp"

namespace wsn {

double gini(std::size_t normal, std::size_t abnormal) {
  const double n = static_cast<double>(normal + abnormal);
  if (n == 0.0) return 0.0;
  const double p0 = static_cast<double>(normal) / n;
  const double p1 = static_cast<double>(abnormal) / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

namespace {

// n * gini(c0, c1), the node's contribution to a weighted impurity sum.
double weighted_impurity(std::size_t c0, std::size_t c1) {
  const double n = static_cast<double>(c0 + c1);
  if (n == 0.0) return 0.0;
  return n - (static_cast<double>(c0) * c0 + static_cast<double>(c1) * c1) / n;
}

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;
};

class Builder {
 public:
  Builder(const Eigen::MatrixXd& x, std::span<const Label> y, const CartConfig& cfg) : x_(x), y_(y), cfg_(cfg) {}

  std::unique_ptr<TreeNode> build(std::vector<std::size_t> rows, int depth) {
    auto node = std::make_unique<TreeNode>();
    for (auto r : rows) ++node->counts[static_cast<int>(y_[r])];
    node->label = node->counts[0] > node->counts[1] ? Label::normal : Label::abnormal;

    const bool pure = node->counts[0] == 0 || node->counts[1] == 0;
    if (pure || depth >= cfg_.max_depth) return node;

    const auto choice = best_split(rows, weighted_impurity(node->counts[0], node->counts[1]));
    if (choice.feature < 0) return node;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (x_(static_cast<Eigen::Index>(r), choice.feature) < choice.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    node->feature = choice.feature;
    node->threshold = choice.threshold;
    node->left = build(std::move(left), depth + 1);
    node->right = build(std::move(right), depth + 1);
    return node;
  }

 private:
  SplitChoice best_split(const std::vector<std::size_t>& rows, double parent_impurity) const {
    SplitChoice best;
    best.impurity = parent_impurity;
    const std::size_t n = rows.size();
    const auto min_leaf = static_cast<std::size_t>(std::max(1, cfg_.min_leaf));
    if (n < 2 * min_leaf) return best;

    std::vector<std::pair<double, int>> column(n);
    for (int j = 0; j < x_.cols(); ++j) {
      for (std::size_t k = 0; k < n; ++k)
        column[k] = {x_(static_cast<Eigen::Index>(rows[k]), j), static_cast<int>(y_[rows[k]])};
      std::sort(column.begin(), column.end());

      std::array<std::size_t, 2> left{0, 0};
      std::array<std::size_t, 2> total{0, 0};
      for (const auto& [v, c] : column) ++total[c];
      for (std::size_t k = 0; k + 1 < n; ++k) {
        ++left[column[k].second];
        if (column[k].first == column[k + 1].first) continue;
        const std::size_t n_left = k + 1;
        if (n_left < min_leaf || n - n_left < min_leaf) continue;
        const double imp = weighted_impurity(left[0], left[1]) +
                           weighted_impurity(total[0] - left[0], total[1] - left[1]);
        if (imp < best.impurity) {
          best.feature = j;
          best.threshold = 0.5 * (column[k].first + column[k + 1].first);
          best.impurity = imp;
        }
      }
    }
    return best;
  }

  const Eigen::MatrixXd& x_;
  std::span<const Label> y_;
  CartConfig cfg_;
};

int depth_of(const TreeNode& node) {
  if (node.is_leaf()) return 0;
  return 1 + std::max(depth_of(*node.left), depth_of(*node.right));
}

std::size_t leaves_of(const TreeNode& node) {
  if (node.is_leaf()) return 1;
  return leaves_of(*node.left) + leaves_of(*node.right);
}

void write_node(std::ostream& out, const TreeNode& node, int indent) {
  out << std::string(static_cast<std::size_t>(indent) * 2, ' ');
  if (node.is_leaf()) {
    out << "leaf " << (node.label == Label::abnormal ? "abnormal" : "normal") << ' ' << node.counts[0] << ' '
        << node.counts[1] << '\n';
    return;
  }
  out << "split f" << node.feature << " < " << node.threshold << '\n';
  write_node(out, *node.left, indent + 1);
  write_node(out, *node.right, indent + 1);
}

}  // namespace

Label DecisionTree::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (!root_) throw std::logic_error("predict on an untrained tree");
  if (x.size() != n_features_)
    throw ShapeError("baseline", "tree expects " + std::to_string(n_features_) + " features, got " +
                                     std::to_string(x.size()));
  const TreeNode* node = root_.get();
  while (!node->is_leaf()) node = x(node->feature) < node->threshold ? node->left.get() : node->right.get();
  return node->label;
}

int DecisionTree::depth() const { return root_ ? depth_of(*root_) : 0; }

std::size_t DecisionTree::leaf_count() const { return root_ ? leaves_of(*root_) : 0; }

void DecisionTree::write_text(std::ostream& out) const {
  if (root_) write_node(out, *root_, 0);
}

DecisionTree train_cart(const Eigen::MatrixXd& features, std::span<const Label> labels, const CartConfig& config) {
  if (features.rows() == 0 || labels.empty()) throw EmptyInputError("baseline", "CART needs training samples");
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw ShapeError("baseline", "feature rows and labels differ in length");
  std::vector<std::size_t> rows(labels.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  Builder builder(features, labels, config);
  return DecisionTree(builder.build(std::move(rows), 0), static_cast<int>(features.cols()));
}

}  // namespace wsn
