#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

namespace orperc {

// SplitMix64 finalizer (Steele/Lea/Flood).  Bijective on 64-bit words with
// strong avalanche; the project routes all hashing and seeding through it.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Lattice vector in Z^D.  Coordinates are signed 64-bit; window-bounded
// algorithms keep them far from overflow.
template <int D>
struct Vec {
  static_assert(D >= 1);
  std::array<std::int64_t, D> c{};

  Vec() = default;
  Vec(std::initializer_list<std::int64_t> xs) {
    int i = 0;
    for (auto x : xs) {
      if (i >= D) break;
      c[i++] = x;
    }
  }

  std::int64_t& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
  std::int64_t operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

  friend Vec operator+(const Vec& a, const Vec& b) {
    Vec r;
    for (int i = 0; i < D; ++i) r.c[i] = a.c[i] + b.c[i];
    return r;
  }
  friend Vec operator-(const Vec& a, const Vec& b) {
    Vec r;
    for (int i = 0; i < D; ++i) r.c[i] = a.c[i] - b.c[i];
    return r;
  }
  friend Vec operator-(const Vec& a) {
    Vec r;
    for (int i = 0; i < D; ++i) r.c[i] = -a.c[i];
    return r;
  }
  friend Vec operator*(std::int64_t k, const Vec& a) {
    Vec r;
    for (int i = 0; i < D; ++i) r.c[i] = k * a.c[i];
    return r;
  }
  friend bool operator==(const Vec& a, const Vec& b) { return a.c == b.c; }
  friend bool operator!=(const Vec& a, const Vec& b) { return a.c != b.c; }
  // Lexicographic; used wherever a deterministic vertex order is required.
  friend bool operator<(const Vec& a, const Vec& b) { return a.c < b.c; }

  bool is_zero() const {
    for (int i = 0; i < D; ++i)
      if (c[i] != 0) return false;
    return true;
  }

  std::int64_t linf() const {
    std::int64_t m = 0;
    for (int i = 0; i < D; ++i) m = std::max(m, std::abs(c[i]));
    return m;
  }

  std::string str() const {
    std::ostringstream os;
    for (int i = 0; i < D; ++i) {
      if (i) os << ',';
      os << c[i];
    }
    return os.str();
  }
};

template <int D>
inline std::int64_t dot(const Vec<D>& a, const Vec<D>& b) {
  std::int64_t s = 0;
  for (int i = 0; i < D; ++i) s += a.c[i] * b.c[i];
  return s;
}

// Scales a nonzero vector down to its primitive form (gcd of coordinates 1,
// direction preserved).  Zero stays zero.
template <int D>
inline Vec<D> gcd_reduce(Vec<D> v) {
  std::int64_t g = 0;
  for (int i = 0; i < D; ++i) g = std::gcd(g, std::abs(v.c[i]));
  if (g > 1)
    for (int i = 0; i < D; ++i) v.c[i] /= g;
  return v;
}

template <int D>
struct VecHash {
  std::size_t operator()(const Vec<D>& v) const {
    std::uint64_t h = 0x2545F4914F6CDD1DULL;
    for (int i = 0; i < D; ++i) h = mix64(h ^ static_cast<std::uint64_t>(v.c[i]));
    return static_cast<std::size_t>(h);
  }
};

// Exact rational on int64, normalized with positive denominator.  Comparisons
// cross-multiply in 128-bit, so values drawn from window-bounded lattice
// geometry never overflow.
struct Frac {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Frac of(std::int64_t n, std::int64_t d = 1) {
    if (d < 0) {
      n = -n;
      d = -d;
    }
    std::int64_t g = std::gcd(std::abs(n), d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    return Frac{n, d == 0 ? 1 : d};
  }

  friend bool operator==(const Frac& a, const Frac& b) {
    return a.num == b.num && a.den == b.den;
  }
  friend bool operator<(const Frac& a, const Frac& b) {
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
  }
  friend bool operator<=(const Frac& a, const Frac& b) {
    return static_cast<__int128>(a.num) * b.den <= static_cast<__int128>(b.num) * a.den;
  }
  friend bool operator>(const Frac& a, const Frac& b) { return b < a; }
  friend bool operator>=(const Frac& a, const Frac& b) { return b <= a; }

  friend Frac operator+(const Frac& a, const Frac& b) {
    return Frac::of(a.num * b.den + b.num * a.den, a.den * b.den);
  }

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

  std::int64_t ceil() const {
    std::int64_t q = num / den;
    if (num > 0 && num % den != 0) ++q;
    return q;
  }
};

}  // namespace orperc
