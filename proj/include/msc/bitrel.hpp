#pragma once

#include <cstdint>
#include <cstddef>
#include <functional>
#include <vector>

namespace msc {

// Fixed-size bitset over event indices.
class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(int n) : n_(n), w_((n + 63) / 64, 0) {}

  int size() const { return n_; }

  bool test(int i) const { return (w_[i >> 6] >> (i & 63)) & 1; }
  void set(int i) { w_[i >> 6] |= uint64_t(1) << (i & 63); }
  void reset(int i) { w_[i >> 6] &= ~(uint64_t(1) << (i & 63)); }

  Bitset& operator|=(const Bitset& o) {
    for (size_t k = 0; k < w_.size(); ++k) w_[k] |= o.w_[k];
    return *this;
  }
  Bitset& operator&=(const Bitset& o) {
    for (size_t k = 0; k < w_.size(); ++k) w_[k] &= o.w_[k];
    return *this;
  }
  void flip_all() {
    for (auto& x : w_) x = ~x;
    trim();
  }

  bool any() const {
    for (auto x : w_)
      if (x) return true;
    return false;
  }
  int count() const {
    int c = 0;
    for (auto x : w_) c += __builtin_popcountll(x);
    return c;
  }
  bool intersects(const Bitset& o) const {
    for (size_t k = 0; k < w_.size(); ++k)
      if (w_[k] & o.w_[k]) return true;
    return false;
  }

  // First set bit at or after `from`, or -1.
  int next(int from) const {
    if (from >= n_) return -1;
    int k = from >> 6;
    uint64_t cur = w_[k] & (~uint64_t(0) << (from & 63));
    while (true) {
      if (cur) return (k << 6) + __builtin_ctzll(cur);
      if (++k >= (int)w_.size()) return -1;
      cur = w_[k];
    }
  }

  bool operator==(const Bitset& o) const { return n_ == o.n_ && w_ == o.w_; }
  bool operator!=(const Bitset& o) const { return !(*this == o); }

  const std::vector<uint64_t>& words() const { return w_; }

 private:
  void trim() {
    if (n_ & 63) w_.back() &= (~uint64_t(0)) >> (64 - (n_ & 63));
  }

  int n_ = 0;
  std::vector<uint64_t> w_;
};

// Binary relation over the events of one MSC, stored as an n x n bit matrix.
class EventRel {
 public:
  EventRel() = default;
  explicit EventRel(int n) : n_(n), stride_((n + 63) / 64), w_(size_t(n) * stride_, 0) {}

  static EventRel identity(int n) {
    EventRel r(n);
    for (int i = 0; i < n; ++i) r.set(i, i);
    return r;
  }
  static EventRel full(int n) {
    EventRel r(n);
    for (auto& x : r.w_) x = ~uint64_t(0);
    r.trim();
    return r;
  }

  int size() const { return n_; }

  bool contains(int e, int f) const {
    return (w_[size_t(e) * stride_ + (f >> 6)] >> (f & 63)) & 1;
  }
  void set(int e, int f) {
    w_[size_t(e) * stride_ + (f >> 6)] |= uint64_t(1) << (f & 63);
  }

  Bitset row(int e) const {
    Bitset b(n_);
    auto& out = const_cast<std::vector<uint64_t>&>(b.words());
    for (int k = 0; k < stride_; ++k) out[k] = w_[size_t(e) * stride_ + k];
    return b;
  }
  void row_or_into(int e, Bitset& acc) const {
    auto& out = const_cast<std::vector<uint64_t>&>(acc.words());
    for (int k = 0; k < stride_; ++k) out[k] |= w_[size_t(e) * stride_ + k];
  }
  void set_row(int e, const Bitset& b) {
    for (int k = 0; k < stride_; ++k) w_[size_t(e) * stride_ + k] = b.words()[k];
  }

  EventRel transpose() const {
    EventRel r(n_);
    for (int e = 0; e < n_; ++e)
      for (int f = next_in_row(e, 0); f >= 0; f = next_in_row(e, f + 1)) r.set(f, e);
    return r;
  }
  EventRel compose(const EventRel& o) const {
    EventRel r(n_);
    for (int e = 0; e < n_; ++e) {
      Bitset acc(n_);
      for (int f = next_in_row(e, 0); f >= 0; f = next_in_row(e, f + 1))
        o.row_or_into(f, acc);
      r.set_row(e, acc);
    }
    return r;
  }
  EventRel unite(const EventRel& o) const {
    EventRel r(*this);
    for (size_t k = 0; k < w_.size(); ++k) r.w_[k] |= o.w_[k];
    return r;
  }
  EventRel intersect(const EventRel& o) const {
    EventRel r(*this);
    for (size_t k = 0; k < w_.size(); ++k) r.w_[k] &= o.w_[k];
    return r;
  }
  EventRel complement() const {
    EventRel r(*this);
    for (auto& x : r.w_) x = ~x;
    r.trim();
    return r;
  }

  // Reflexive-transitive closure.
  EventRel rt_closure() const {
    EventRel r = unite(identity(n_));
    bool changed = true;
    while (changed) {
      changed = false;
      for (int e = 0; e < n_; ++e) {
        Bitset acc = r.row(e);
        Bitset before = acc;
        for (int f = acc.next(0); f >= 0; f = acc.next(f + 1)) r.row_or_into(f, acc);
        if (acc != before) {
          r.set_row(e, acc);
          changed = true;
        }
      }
    }
    return r;
  }

  Bitset diagonal() const {
    Bitset b(n_);
    for (int e = 0; e < n_; ++e)
      if (contains(e, e)) b.set(e);
    return b;
  }

  int next_in_row(int e, int from) const {
    if (from >= n_) return -1;
    int k = from >> 6;
    const uint64_t* base = &w_[size_t(e) * stride_];
    uint64_t cur = base[k] & (~uint64_t(0) << (from & 63));
    while (true) {
      if (cur) return (k << 6) + __builtin_ctzll(cur);
      if (++k >= stride_) return -1;
      cur = base[k];
    }
  }

  size_t pair_count() const {
    size_t c = 0;
    for (auto x : w_) c += __builtin_popcountll(x);
    return c;
  }

  bool operator==(const EventRel& o) const { return n_ == o.n_ && w_ == o.w_; }
  bool operator!=(const EventRel& o) const { return !(*this == o); }

 private:
  void trim() {
    if (n_ & 63) {
      uint64_t mask = (~uint64_t(0)) >> (64 - (n_ & 63));
      for (int e = 0; e < n_; ++e) w_[size_t(e) * stride_ + stride_ - 1] &= mask;
    }
  }

  int n_ = 0;
  int stride_ = 0;
  std::vector<uint64_t> w_;
};

}  // namespace msc
