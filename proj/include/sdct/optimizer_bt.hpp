#pragma once

// Binary subband trees over the zigzag-ordered angle vector (SDCT-BT).
//
// A subband is a run of angle positions sharing one angle. Starting from a
// single subband, each subband may be halved (the odd position goes to the
// second half). The resulting binary tree is signalled breadth-first from the
// root, one bit per node: 1 = leaf (an actual subband), 0 = split. A tree
// with s leaves therefore costs 2s - 1 bits.

#include <functional>
#include <vector>

#include "sdct/rd_model.hpp"
#include "sdct/transform.hpp"

namespace sdct {

class SubbandTree {
 public:
  struct Node {
    int begin = 0;  ///< first zigzag position
    int end = 0;    ///< one past the last position
    int level = 1;  ///< root is level 1
    bool leaf = true;
    int angle = 0;  ///< Q_theta index, meaningful for leaves
    int left = -1;
    int right = -1;

    int length() const { return end - begin; }
  };

  SubbandTree() = default;
  explicit SubbandTree(int p, int root_angle = 0);

  /// Deepest level a node may occupy: floor(log2 p) + 1.
  static int max_depth(int p) { return floor_log2(p) + 1; }

  int p() const { return p_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  bool can_split(int id) const;
  /// Halves leaf `id` into two leaves with the given angles.
  void split(int id, int left_angle, int right_angle);
  void set_angle(int leaf_id, int angle);

  /// Leaf ids in position order.
  std::vector<int> leaves() const;
  int num_leaves() const;
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int depth() const;

  /// Same subband structure and leaf angles.
  friend bool operator==(const SubbandTree& a, const SubbandTree& b);

 private:
  int p_ = 0;
  std::vector<Node> nodes_;
};

/// Breadth-first node labels, 1 = leaf, 0 = split.
std::vector<bool> serialize_tree(const SubbandTree& tree);
/// Rebuilds the structure (leaf angles left at 0) reading one label per call
/// of `next_bit`. Throws FormatError::MalformedTree on an impossible split.
SubbandTree deserialize_tree(const std::function<bool()>& next_bit, int p);
/// As above, but the sequence must be consumed exactly.
SubbandTree deserialize_tree(const std::vector<bool>& bits, int p);

AngleVector expand_tree_to_angles(const SubbandTree& tree, int n, int q_theta);

struct BtResult {
  SubbandTree tree;
  AngleVector angles;
  RdBreakdown breakdown;
  std::vector<int> indices;  ///< quantization indices of the coefficients
  int init_index = 0;
};

struct BtOptions {
  /// Split levels to attempt; negative means floor(log2 p).
  int max_levels = -1;
};

/// J of an angle vector with the coefficients tied to it: c = Q[R^T c_DCT],
/// actual coefficient bits, and R_theta for `subbands` in the params' mode.
RdBreakdown evaluate_quantized(const VectorXd& dct_coeffs, const AngleVector& angles, int subbands,
                               const RdParams& params, std::vector<int>* indices = nullptr);

BtResult run_sdct_bt(const VectorXd& dct_coeffs, const RdParams& params, int init_angle,
                     const BtOptions& options = {});
/// Runs SDCT-BT from every initial angle and keeps the lowest J.
BtResult run_sdct_bt_best(const VectorXd& dct_coeffs, const RdParams& params, const BtOptions& options = {});

/// One angle for the whole block, chosen exhaustively over Q_theta, with
/// ceil(log2 q) angle bits plus the mode bit charged.
struct Sdct1Result {
  int angle_index = 0;
  VectorXd coeffs;
  std::vector<int> indices;
  RdBreakdown breakdown;
};
Sdct1Result search_single_angle(const VectorXd& dct_coeffs, const RdParams& params);

}  // namespace sdct
