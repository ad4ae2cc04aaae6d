#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <fstream>
#include <string>
#include <vector>

#include "orperc/errors.hpp"
#include "orperc/graph.hpp"
#include "orperc/random_field.hpp"
#include "orperc/search.hpp"
#include "orperc/vec.hpp"

namespace orperc {

enum class RenderMode { hop_distance, passage_time };

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

// 64-entry palettes built with integer arithmetic only, so the byte output
// is identical on every platform.  Entry 0 of wheel64 is pure red; no entry
// is black, which is reserved for unsettled background.
inline std::array<Rgb, 64> make_palette(const std::string& name) {
  std::array<Rgb, 64> pal{};
  if (name == "gray64") {
    for (int i = 0; i < 64; ++i) {
      const auto v = static_cast<std::uint8_t>(64 + 3 * i);
      pal[static_cast<std::size_t>(i)] = {v, v, v};
    }
    return pal;
  }
  if (name != "wheel64") throw spec_error("unknown palette: " + name);
  for (int i = 0; i < 64; ++i) {
    const int pos = i * 1530 / 64;  // 6 sectors of 255 steps
    const int sector = pos / 255;
    const int rem = pos % 255;
    int r = 0, g = 0, b = 0;
    switch (sector) {
      case 0: r = 255; g = rem; break;
      case 1: r = 255 - rem; g = 255; break;
      case 2: g = 255; b = rem; break;
      case 3: g = 255 - rem; b = 255; break;
      case 4: r = rem; b = 255; break;
      default: r = 255; b = 255 - rem; break;
    }
    pal[static_cast<std::size_t>(i)] = {static_cast<std::uint8_t>(r),
                                        static_cast<std::uint8_t>(g),
                                        static_cast<std::uint8_t>(b)};
  }
  return pal;
}

struct RenderJob {
  GraphSpec<2> g;
  FieldParams params;
  std::int64_t half_width = 100;  // image is (2W+1) x (2W+1) pixels
  RenderMode mode = RenderMode::hop_distance;
  std::string palette = "wheel64";
};

// Dijkstra coloring of the cluster of the origin inside the viewport.
// hop_distance runs over open edges at unit cost; passage_time runs over all
// edges with nu_p weights.  Settled vertices are colored by distance modulo
// the palette size; the frontier is explored to exhaustion inside the
// viewport (vertices on the border are settled but have no out-neighbors to
// expand there).  Output is a binary PPM (P6), bit-exact given the job.
inline std::vector<std::uint8_t> render_cluster(const RenderJob& job) {
  if (job.half_width < 1) throw spec_error("viewport half-width must be >= 1");
  const std::int64_t w = job.half_width;
  const std::int64_t side = 2 * w + 1;
  const auto pal = make_palette(job.palette);

  VisitTable<2> table(w);  // (dist << 1) | settled-or-final marker semantics
  std::deque<std::pair<Vec<2>, std::int32_t>> dq;
  std::vector<std::pair<Vec<2>, std::int32_t>> settled;
  table.set(Vec<2>{}, 0);
  dq.emplace_back(Vec<2>{}, 0);
  while (!dq.empty()) {
    auto [x, dx] = dq.front();
    dq.pop_front();
    if (table.get(x) != (dx << 1)) continue;
    table.set(x, (dx << 1) | 1);
    settled.emplace_back(x, dx);
    for (std::int32_t i = 0; i < job.g.degree(); ++i) {
      const Vec<2> y = x + job.g.dirs[static_cast<std::size_t>(i)];
      if (y.linf() > w) continue;
      std::int32_t cost;
      if (job.mode == RenderMode::hop_distance) {
        if (!edge_open(job.params, EdgeKey<2>{x, i})) continue;
        cost = 1;
      } else {
        cost = static_cast<std::int32_t>(edge_time(job.params, EdgeKey<2>{x, i}));
      }
      const std::int32_t nd = dx + cost;
      const std::int32_t prev = table.get(y);
      if (prev != VisitTable<2>::kAbsent && ((prev & 1) || (prev >> 1) <= nd)) continue;
      table.set(y, nd << 1);
      if (cost == 0)
        dq.emplace_front(y, nd);
      else
        dq.emplace_back(y, nd);
    }
  }

  std::vector<std::uint8_t> img(static_cast<std::size_t>(side * side * 3), 0);
  for (const auto& [v, d] : settled) {
    const std::int64_t col = v.c[0] + w;
    const std::int64_t row = w - v.c[1];
    const std::size_t off = static_cast<std::size_t>((row * side + col) * 3);
    const Rgb& c = pal[static_cast<std::size_t>(d % 64)];
    img[off] = c.r;
    img[off + 1] = c.g;
    img[off + 2] = c.b;
  }

  std::string header = "P6\n" + std::to_string(side) + " " + std::to_string(side) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.begin(), img.end());
  return out;
}

inline void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw refusal_error("cannot open output file: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
}

}  // namespace orperc
