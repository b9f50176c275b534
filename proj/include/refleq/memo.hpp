#ifndef REFLEQ_MEMO_HPP
#define REFLEQ_MEMO_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <unordered_map>

namespace refleq::detail {

/// Memo table for values of a real-argument function, keyed on a lattice
/// quantization of the argument so that quadrature nodes generated from
/// different interval offsets share entries (they agree to ~1 ulp but not
/// bitwise). The compute callback receives the snapped argument
/// key * quantum, which makes every stored value a pure function of the
/// key: racing threads that compute the same entry twice produce identical
/// bits, so results do not depend on thread count or insertion order.
/// Sharded so concurrent grid-point evaluations rarely contend.
template <typename V>
class MemoTable {
 public:
  explicit MemoTable(double quantum = 1e-9) : quantum_(quantum) {}

  void reset(double quantum) {
    quantum_ = quantum;
    clear();
  }

  std::int64_t quantize(double x) const { return std::llround(x / quantum_); }
  double snap(double x) const {
    return static_cast<double>(quantize(x)) * quantum_;
  }

  template <typename F>
  V get_or_compute(double x, F&& compute) {
    const std::int64_t key = quantize(x);
    Shard& s = shard(key);
    {
      std::lock_guard<std::mutex> lock(s.mutex);
      auto it = s.map.find(key);
      if (it != s.map.end()) return it->second;
    }
    // outside the lock; may recurse into other tables
    const V value = compute(static_cast<double>(key) * quantum_);
    std::lock_guard<std::mutex> lock(s.mutex);
    return s.map.emplace(key, value).first->second;
  }

  bool lookup(double x, V& out) const {
    const std::int64_t key = quantize(x);
    const Shard& s = shard(key);
    std::lock_guard<std::mutex> lock(s.mutex);
    auto it = s.map.find(key);
    if (it == s.map.end()) return false;
    out = it->second;
    return true;
  }

  void store(double x, const V& value) {
    const std::int64_t key = quantize(x);
    Shard& s = shard(key);
    std::lock_guard<std::mutex> lock(s.mutex);
    s.map.insert_or_assign(key, value);
  }

  void clear() {
    for (auto& s : shards_) {
      std::lock_guard<std::mutex> lock(s.mutex);
      s.map.clear();
    }
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& s : shards_) {
      std::lock_guard<std::mutex> lock(s.mutex);
      n += s.map.size();
    }
    return n;
  }

 private:
  struct Shard {
    mutable std::mutex mutex;
    std::unordered_map<std::int64_t, V> map;
  };

  Shard& shard(std::int64_t key) {
    return shards_[(static_cast<std::uint64_t>(key) * 0x9E3779B97F4A7C15ull) >> 58];
  }
  const Shard& shard(std::int64_t key) const {
    return shards_[(static_cast<std::uint64_t>(key) * 0x9E3779B97F4A7C15ull) >> 58];
  }

  double quantum_;
  std::array<Shard, 64> shards_;
};

}  // namespace refleq::detail

#endif  // REFLEQ_MEMO_HPP
