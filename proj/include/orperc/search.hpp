#pragma once

#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "orperc/vec.hpp"

namespace orperc {

// Vertex -> int32 value map used by the lattice searches.  Windows with a
// small enough bounding box get a dense stamped array (O(1) reset between
// replicas); otherwise d <= 2 uses an epoch-stamped open-addressing table
// over packed coordinates, and higher dimensions fall back to a hash map.
// All backends give identical search results.
template <int D>
class VisitTable {
 public:
  static constexpr std::int32_t kAbsent = std::numeric_limits<std::int32_t>::min();
  static constexpr std::int64_t kDenseCellCap = std::int64_t{1} << 23;

  explicit VisitTable(std::int64_t bbox_radius) {
    if (bbox_radius >= 0) {
      std::int64_t vol = 1;
      bool fits = true;
      for (int i = 0; i < D; ++i) {
        vol *= 2 * bbox_radius + 1;
        if (vol > kDenseCellCap) {
          fits = false;
          break;
        }
      }
      if (fits) {
        dense_ = true;
        radius_ = bbox_radius;
        side_ = 2 * bbox_radius + 1;
        stamp_.assign(static_cast<std::size_t>(vol), 0);
        value_.assign(static_cast<std::size_t>(vol), 0);
        epoch_ = 1;
      }
    }
    if (!dense_) {
      if constexpr (D <= 2) {
        okey_.assign(kInitialSlots, 0);
        ostamp_.assign(kInitialSlots, 0);
        oval_.assign(kInitialSlots, 0);
        omask_ = kInitialSlots - 1;
        epoch_ = 1;
      } else {
        map_.reserve(1 << 12);
      }
    }
  }

  void reset() {
    if constexpr (D > 2) {
      if (!dense_) {
        map_.clear();
        return;
      }
    }
    osize_ = 0;
    if (++epoch_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      std::fill(ostamp_.begin(), ostamp_.end(), 0);
      epoch_ = 1;
    }
  }

  std::int32_t get(const Vec<D>& v) const {
    if (dense_) {
      const std::size_t i = dense_index(v);
      return stamp_[i] == epoch_ ? value_[i] : kAbsent;
    }
    if constexpr (D <= 2) {
      const std::uint64_t key = pack(v);
      std::size_t i = slot_of(key);
      while (ostamp_[i] == epoch_) {
        if (okey_[i] == key) return oval_[i];
        i = (i + 1) & omask_;
      }
      return kAbsent;
    } else {
      auto it = map_.find(v);
      return it == map_.end() ? kAbsent : it->second;
    }
  }

  void set(const Vec<D>& v, std::int32_t val) {
    if (dense_) {
      const std::size_t i = dense_index(v);
      stamp_[i] = epoch_;
      value_[i] = val;
      return;
    }
    if constexpr (D <= 2) {
      const std::uint64_t key = pack(v);
      std::size_t i = slot_of(key);
      while (ostamp_[i] == epoch_) {
        if (okey_[i] == key) {
          oval_[i] = val;
          return;
        }
        i = (i + 1) & omask_;
      }
      place(i, key, val);
    } else {
      map_[v] = val;
    }
  }

  // True if v was absent; marks it with val.
  bool insert(const Vec<D>& v, std::int32_t val = 0) {
    if (dense_) {
      const std::size_t i = dense_index(v);
      if (stamp_[i] == epoch_) return false;
      stamp_[i] = epoch_;
      value_[i] = val;
      return true;
    }
    if constexpr (D <= 2) {
      const std::uint64_t key = pack(v);
      std::size_t i = slot_of(key);
      while (ostamp_[i] == epoch_) {
        if (okey_[i] == key) return false;
        i = (i + 1) & omask_;
      }
      place(i, key, val);
      return true;
    } else {
      return map_.emplace(v, val).second;
    }
  }

 private:
  static constexpr std::size_t kInitialSlots = std::size_t{1} << 12;

  std::size_t dense_index(const Vec<D>& v) const {
    std::int64_t idx = 0;
    for (int i = 0; i < D; ++i) idx = idx * side_ + (v.c[i] + radius_);
    return static_cast<std::size_t>(idx);
  }

  static std::uint64_t pack(const Vec<D>& v) {
    if constexpr (D == 1) return static_cast<std::uint64_t>(v.c[0]);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(v.c[0])) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(v.c[1]));
  }

  std::size_t slot_of(std::uint64_t key) const {
    return static_cast<std::size_t>(mix64(key)) & omask_;
  }

  void place(std::size_t i, std::uint64_t key, std::int32_t val) {
    okey_[i] = key;
    ostamp_[i] = epoch_;
    oval_[i] = val;
    if (++osize_ * 2 > okey_.size()) grow();
  }

  void grow() {
    std::vector<std::uint64_t> old_key = std::move(okey_);
    std::vector<std::uint32_t> old_stamp = std::move(ostamp_);
    std::vector<std::int32_t> old_val = std::move(oval_);
    const std::size_t slots = old_key.size() * 2;
    okey_.assign(slots, 0);
    ostamp_.assign(slots, 0);
    oval_.assign(slots, 0);
    omask_ = slots - 1;
    // Only the live epoch survives a rehash.
    for (std::size_t i = 0; i < old_key.size(); ++i) {
      if (old_stamp[i] != epoch_) continue;
      std::size_t j = slot_of(old_key[i]);
      while (ostamp_[j] == epoch_) j = (j + 1) & omask_;
      okey_[j] = old_key[i];
      ostamp_[j] = epoch_;
      oval_[j] = old_val[i];
    }
  }

  bool dense_ = false;
  std::int64_t radius_ = 0;
  std::int64_t side_ = 0;
  std::uint32_t epoch_ = 0;
  std::vector<std::uint32_t> stamp_;
  std::vector<std::int32_t> value_;

  std::vector<std::uint64_t> okey_;
  std::vector<std::uint32_t> ostamp_;
  std::vector<std::int32_t> oval_;
  std::size_t omask_ = 0;
  std::size_t osize_ = 0;

  std::unordered_map<Vec<D>, std::int32_t, VecHash<D>> map_;
};

}  // namespace orperc
