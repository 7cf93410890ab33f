#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace ssrqd {

// Order-statistic treap over doubles with duplicate support.  Backs the
// streaming rank computation: insert and strict count-less are O(log n)
// expected, so ranking an n-point stream costs O(n log n) instead of the
// O(n^2) a naive rescan would take.  Nodes live in a contiguous arena and
// priorities come from a private deterministic mixer, so tree shape -- and
// therefore every downstream result -- depends only on the insertion
// sequence, not on allocator or RNG state.
class OrderStatisticTree {
 public:
  OrderStatisticTree() = default;

  void clear() {
    nodes_.clear();
    root_ = kNil;
    prio_counter_ = 0;
  }

  int size() const { return static_cast<int>(nodes_.size()); }

  void insert(double value) {
    const std::uint32_t node = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(Node{value, kNil, kNil, 1, next_priority()});
    auto [left, right] = split_less(root_, value);
    root_ = merge(merge(left, node), right);
  }

  // Number of stored values strictly less than `value`.
  int count_less(double value) const {
    int count = 0;
    std::uint32_t t = root_;
    while (t != kNil) {
      const Node& n = nodes_[t];
      if (n.value < value) {
        count += 1 + subtree_size(n.left);
        t = n.right;
      } else {
        t = n.left;
      }
    }
    return count;
  }

  bool contains(double value) const {
    std::uint32_t t = root_;
    while (t != kNil) {
      const Node& n = nodes_[t];
      if (value < n.value) {
        t = n.left;
      } else if (n.value < value) {
        t = n.right;
      } else {
        return true;
      }
    }
    return false;
  }

  void reserve(int n) { nodes_.reserve(static_cast<std::size_t>(n)); }

 private:
  static constexpr std::uint32_t kNil = 0xffffffffu;

  struct Node {
    double value;
    std::uint32_t left, right;
    std::uint32_t size;
    std::uint64_t priority;
  };

  std::uint32_t subtree_size(std::uint32_t t) const {
    return t == kNil ? 0 : nodes_[t].size;
  }

  void pull(std::uint32_t t) {
    nodes_[t].size =
        1 + subtree_size(nodes_[t].left) + subtree_size(nodes_[t].right);
  }

  // (values < pivot, values >= pivot)
  std::pair<std::uint32_t, std::uint32_t> split_less(std::uint32_t t,
                                                     double pivot) {
    if (t == kNil) return {kNil, kNil};
    if (nodes_[t].value < pivot) {
      auto [left, right] = split_less(nodes_[t].right, pivot);
      nodes_[t].right = left;
      pull(t);
      return {t, right};
    }
    auto [left, right] = split_less(nodes_[t].left, pivot);
    nodes_[t].left = right;
    pull(t);
    return {left, t};
  }

  std::uint32_t merge(std::uint32_t a, std::uint32_t b) {
    if (a == kNil) return b;
    if (b == kNil) return a;
    if (nodes_[a].priority > nodes_[b].priority) {
      nodes_[a].right = merge(nodes_[a].right, b);
      pull(a);
      return a;
    }
    nodes_[b].left = merge(a, nodes_[b].left);
    pull(b);
    return b;
  }

  // SplitMix64 finalizer over an insertion counter: high-quality priorities
  // with no shared RNG state.
  std::uint64_t next_priority() {
    std::uint64_t z = (++prio_counter_) * 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::vector<Node> nodes_;
  std::uint32_t root_ = kNil;
  std::uint64_t prio_counter_ = 0;
};

}  // namespace ssrqd
