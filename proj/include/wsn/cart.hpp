#ifndef WSN_CART_HPP
#define WSN_CART_HPP

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <memory>
#include <ostream>
#include <span>

#include "wsn/ingest.hpp"

namespace wsn {

struct CartConfig {
  int max_depth = 12;
  int min_leaf = 5;
};

/// Leaf when `left` is null; otherwise x[feature] < threshold goes left.
struct TreeNode {
  Label label = Label::normal;          // majority class (ties -> abnormal)
  std::array<std::size_t, 2> counts{};  // training samples per class
  int feature = -1;
  double threshold = 0.0;
  std::unique_ptr<TreeNode> left;
  std::unique_ptr<TreeNode> right;

  bool is_leaf() const noexcept { return left == nullptr; }
};

/// Gini impurity of a node with the given class counts.
double gini(std::size_t normal, std::size_t abnormal);

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::unique_ptr<TreeNode> root, int n_features) : root_(std::move(root)), n_features_(n_features) {}

  Label predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  const TreeNode& root() const { return *root_; }
  int depth() const;
  std::size_t leaf_count() const;
  int feature_count() const { return n_features_; }

  /// Indented text dump: "split f<index> < <threshold>" / "leaf <class> <n0> <n1>".
  void write_text(std::ostream& out) const;

 private:
  std::unique_ptr<TreeNode> root_;
  int n_features_ = 0;
};

/// Greedy CART on rows of `features` with binary axis-aligned splits chosen
/// by weighted Gini. Splitting stops on a pure node, at max_depth, or when no
/// split leaves min_leaf samples on both sides and strictly lowers impurity.
/// Equal-impurity candidates resolve to the lowest feature, then the lowest
/// threshold.
DecisionTree train_cart(const Eigen::MatrixXd& features, std::span<const Label> labels, const CartConfig& config = {});

}  // namespace wsn

#endif  // WSN_CART_HPP
