#include "sdct/optimizer_bt.hpp"

#include <deque>
#include <map>
#include <utility>

#include "sdct/entropy.hpp"

namespace sdct {

SubbandTree::SubbandTree(int p, int root_angle) : p_(p) {
  if (p < 1) throw InvalidArgument("SubbandTree: p must be positive");
  Node root;
  root.begin = 0;
  root.end = p;
  root.angle = root_angle;
  nodes_.push_back(root);
}

bool SubbandTree::can_split(int id) const {
  const Node& nd = node(id);
  return nd.leaf && nd.length() >= 2 && nd.level < max_depth(p_);
}

void SubbandTree::split(int id, int left_angle, int right_angle) {
  if (!can_split(id)) throw InvalidArgument("SubbandTree::split: node cannot be split");
  const Node parent = node(id);
  const int mid = parent.begin + parent.length() / 2;
  Node l{parent.begin, mid, parent.level + 1, true, left_angle, -1, -1};
  Node r{mid, parent.end, parent.level + 1, true, right_angle, -1, -1};
  nodes_.push_back(l);
  nodes_.push_back(r);
  Node& nd = nodes_[static_cast<std::size_t>(id)];
  nd.leaf = false;
  nd.left = static_cast<int>(nodes_.size()) - 2;
  nd.right = static_cast<int>(nodes_.size()) - 1;
}

void SubbandTree::set_angle(int leaf_id, int angle) {
  Node& nd = nodes_[static_cast<std::size_t>(leaf_id)];
  if (!nd.leaf) throw InvalidArgument("SubbandTree::set_angle: not a leaf");
  nd.angle = angle;
}

std::vector<int> SubbandTree::leaves() const {
  std::vector<int> out;
  if (nodes_.empty()) return out;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const Node& nd = node(id);
    if (nd.leaf) {
      out.push_back(id);
    } else {
      stack.push_back(nd.right);
      stack.push_back(nd.left);
    }
  }
  return out;
}

int SubbandTree::num_leaves() const { return static_cast<int>(leaves().size()); }

int SubbandTree::depth() const {
  int d = 0;
  for (const auto& nd : nodes_) d = std::max(d, nd.level);
  return d;
}

bool operator==(const SubbandTree& a, const SubbandTree& b) {
  if (a.p_ != b.p_ || serialize_tree(a) != serialize_tree(b)) return false;
  const auto la = a.leaves();
  const auto lb = b.leaves();
  for (std::size_t i = 0; i < la.size(); ++i) {
    const auto& x = a.node(la[i]);
    const auto& y = b.node(lb[i]);
    if (x.begin != y.begin || x.end != y.end || x.angle != y.angle) return false;
  }
  return true;
}

std::vector<bool> serialize_tree(const SubbandTree& tree) {
  std::vector<bool> bits;
  std::deque<int> queue{0};
  while (!queue.empty()) {
    const auto& nd = tree.node(queue.front());
    queue.pop_front();
    bits.push_back(nd.leaf);
    if (!nd.leaf) {
      queue.push_back(nd.left);
      queue.push_back(nd.right);
    }
  }
  return bits;
}

SubbandTree deserialize_tree(const std::function<bool()>& next_bit, int p) {
  SubbandTree tree(p);
  std::deque<int> queue{0};
  while (!queue.empty()) {
    const int id = queue.front();
    queue.pop_front();
    if (next_bit()) continue;
    if (!tree.can_split(id))
      throw FormatError(FormatError::Kind::MalformedTree, "subband tree: split of an unsplittable node");
    tree.split(id, 0, 0);
    const auto& nd = tree.node(id);
    queue.push_back(nd.left);
    queue.push_back(nd.right);
  }
  return tree;
}

SubbandTree deserialize_tree(const std::vector<bool>& bits, int p) {
  std::size_t pos = 0;
  auto next = [&]() -> bool {
    if (pos >= bits.size()) throw FormatError(FormatError::Kind::MalformedTree, "subband tree: truncated labels");
    return bits[pos++];
  };
  SubbandTree tree = deserialize_tree(next, p);
  if (pos != bits.size()) throw FormatError(FormatError::Kind::MalformedTree, "subband tree: trailing labels");
  return tree;
}

AngleVector expand_tree_to_angles(const SubbandTree& tree, int n, int q_theta) {
  if (tree.p() != num_pairs(n)) throw InvalidArgument("expand_tree_to_angles: tree does not match block size");
  AngleVector angles(n, q_theta);
  for (int id : tree.leaves()) {
    const auto& nd = tree.node(id);
    for (int j = nd.begin; j < nd.end; ++j) angles.set_index(j, nd.angle);
  }
  return angles;
}

RdBreakdown evaluate_quantized(const VectorXd& dct_coeffs, const AngleVector& angles, int subbands,
                               const RdParams& params, std::vector<int>* indices) {
  const SdctBasis<double> basis(angles);
  VectorXd exact = dct_coeffs;
  rotate_forward<double>(basis.pairs(), basis.cosines(), basis.sines(), exact);
  std::vector<int> q = quantize_indices(exact, params.coeff_step);
  double dist = 0.0;
  int nonzeros = 0;
  for (Eigen::Index i = 0; i < exact.size(); ++i) {
    const double v = q[static_cast<std::size_t>(i)] * params.coeff_step;
    dist += (exact(i) - v) * (exact(i) - v);
    nonzeros += q[static_cast<std::size_t>(i)] != 0;
  }
  const double rc = static_cast<double>(measure_block_rate(q));
  const double ra = rate_angles_for_subbands(subbands, angles.size(), params);
  if (indices) *indices = std::move(q);
  return make_breakdown(dist, rc, ra, subbands, nonzeros, params.lambda);
}

BtResult run_sdct_bt(const VectorXd& dct_coeffs, const RdParams& params, int init_angle,
                     const BtOptions& options) {
  params.validate();
  const int n = block_side(static_cast<std::size_t>(dct_coeffs.size()));
  const int p = num_pairs(n);
  RdParams tree_params = params;
  tree_params.angle_mode = AngleRateMode::Tree;

  // Memo of J per (angle vector, subband count) within this block.
  std::map<std::pair<std::vector<int>, int>, RdBreakdown> memo;
  auto J = [&](const AngleVector& angles, int subbands) {
    auto key = std::make_pair(angles.indices(), subbands);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    RdBreakdown b = evaluate_quantized(dct_coeffs, angles, subbands, tree_params);
    memo.emplace(std::move(key), b);
    return b;
  };

  BtResult result;
  result.init_index = init_angle;
  result.tree = SubbandTree(p, init_angle);
  result.angles = AngleVector(n, params.q_theta, init_angle);
  result.breakdown = J(result.angles, 1);

  const int levels = options.max_levels < 0 ? floor_log2(p) : options.max_levels;
  std::vector<int> frontier{0};
  for (int level = 1; level <= levels; ++level) {
    std::vector<int> next;
    for (int id : frontier) {
      if (!result.tree.can_split(id)) continue;
      const auto parent = result.tree.node(id);
      const int mid = parent.begin + parent.length() / 2;
      const int subbands = result.tree.num_leaves() + 1;
      AngleVector theta = result.angles;

      // Sequential search: the first half moves while the second keeps the
      // parent's angle, then the second half moves with the first fixed.
      auto search = [&](int begin, int end) {
        int best = -1;
        RdBreakdown best_b;
        for (int x = 0; x < params.q_theta; ++x) {
          for (int j = begin; j < end; ++j) theta.set_index(j, x);
          const RdBreakdown b = J(theta, subbands);
          if (best < 0 || b.J < best_b.J) {
            best = x;
            best_b = b;
          }
        }
        for (int j = begin; j < end; ++j) theta.set_index(j, best);
        return std::make_pair(best, best_b);
      };
      const auto [left_angle, left_b] = search(parent.begin, mid);
      const auto [right_angle, split_b] = search(mid, parent.end);
      (void)left_b;
      if (split_b.J < result.breakdown.J) {
        result.tree.split(id, left_angle, right_angle);
        result.angles = theta;
        result.breakdown = split_b;
        const auto& nd = result.tree.node(id);
        next.push_back(nd.left);
        next.push_back(nd.right);
      }
    }
    if (next.empty()) break;
    frontier = std::move(next);
  }
  evaluate_quantized(dct_coeffs, result.angles, result.tree.num_leaves(), tree_params, &result.indices);
  return result;
}

BtResult run_sdct_bt_best(const VectorXd& dct_coeffs, const RdParams& params, const BtOptions& options) {
  BtResult best;
  bool have = false;
  for (int idx = 0; idx < params.q_theta; ++idx) {
    BtResult r = run_sdct_bt(dct_coeffs, params, idx, options);
    if (!have || r.breakdown.J < best.breakdown.J) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

Sdct1Result search_single_angle(const VectorXd& dct_coeffs, const RdParams& params) {
  params.validate();
  const int n = block_side(static_cast<std::size_t>(dct_coeffs.size()));
  RdParams tree_params = params;
  tree_params.angle_mode = AngleRateMode::Tree;  // one leaf: angle bits + 1
  Sdct1Result best;
  bool have = false;
  for (int idx = 0; idx < params.q_theta; ++idx) {
    std::vector<int> indices;
    const RdBreakdown b = evaluate_quantized(dct_coeffs, AngleVector(n, params.q_theta, idx), 1, tree_params, &indices);
    if (!have || b.J < best.breakdown.J) {
      best.angle_index = idx;
      best.indices = std::move(indices);
      best.breakdown = b;
      have = true;
    }
  }
  best.coeffs.resize(dct_coeffs.size());
  for (Eigen::Index i = 0; i < best.coeffs.size(); ++i)
    best.coeffs(i) = best.indices[static_cast<std::size_t>(i)] * params.coeff_step;
  return best;
}

}  // namespace sdct
