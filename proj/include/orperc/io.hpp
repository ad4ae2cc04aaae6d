#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "orperc/cones.hpp"
#include "orperc/errors.hpp"
#include "orperc/fpp.hpp"
#include "orperc/graph.hpp"
#include "orperc/sharp_transition.hpp"
#include "orperc/vec.hpp"

namespace orperc {

using nlohmann::json;

inline std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

// --------------------------------------------------------------------------
// Graph specs: {"d": int, "dirs": [[int,...],...]}

template <int D>
json graph_to_json(const GraphSpec<D>& g) {
  json dirs = json::array();
  for (const auto& v : g.dirs) {
    json row = json::array();
    for (int i = 0; i < D; ++i) row.push_back(v.c[i]);
    dirs.push_back(row);
  }
  return json{{"d", D}, {"dirs", dirs}};
}

inline int graph_json_dim(const json& j) {
  if (!j.contains("d") || !j["d"].is_number_integer())
    throw spec_error("graph json needs an integer field d");
  return j["d"].get<int>();
}

template <int D>
GraphSpec<D> graph_from_json(const json& j) {
  if (graph_json_dim(j) != D) throw spec_error("graph json dimension mismatch");
  if (!j.contains("dirs") || !j["dirs"].is_array())
    throw spec_error("graph json needs a dirs array");
  std::vector<Vec<D>> dirs;
  for (const auto& row : j["dirs"]) {
    if (!row.is_array() || static_cast<int>(row.size()) != D)
      throw spec_error("graph json direction with wrong arity");
    Vec<D> v;
    for (int i = 0; i < D; ++i) v.c[i] = row[static_cast<std::size_t>(i)].get<std::int64_t>();
    dirs.push_back(v);
  }
  return make_graph<D>(std::move(dirs));
}

// --------------------------------------------------------------------------
// Subadditive weights.

template <int D>
json weight_to_json(const SubadditiveWeight<D>& w) {
  json forms = json::array();
  for (const auto& f : w.forms()) {
    json num = json::array();
    for (int i = 0; i < D; ++i) num.push_back(f.num.c[i]);
    forms.push_back(json{{"num", num}, {"den", f.den}});
  }
  return json{{"forms", forms}};
}

template <int D>
SubadditiveWeight<D> weight_from_json(const json& j) {
  if (!j.contains("forms") || !j["forms"].is_array() || j["forms"].empty())
    throw spec_error("weight json needs a nonempty forms array");
  std::vector<LinearForm<D>> forms;
  for (const auto& f : j["forms"]) {
    LinearForm<D> lf;
    const auto& num = f.at("num");
    if (!num.is_array() || static_cast<int>(num.size()) != D)
      throw spec_error("weight form with wrong arity");
    for (int i = 0; i < D; ++i) lf.num.c[i] = num[static_cast<std::size_t>(i)].get<std::int64_t>();
    lf.den = f.value("den", std::int64_t{1});
    forms.push_back(lf);
  }
  return SubadditiveWeight<D>::max_of(std::move(forms));
}

// --------------------------------------------------------------------------
// Decay certificates:
// {"S": [[..],..], "p": .., "phi": .., "phi_ci": [..,..], "L": int, "psi": {...}}

template <int D>
json certificate_to_json(const DecayCertificate<D>& cert) {
  json verts = json::array();
  for (const auto& v : cert.S.vertices) {
    json row = json::array();
    for (int i = 0; i < D; ++i) row.push_back(v.c[i]);
    verts.push_back(row);
  }
  return json{{"S", verts},
              {"p", cert.p},
              {"phi", cert.phi.value},
              {"phi_ci", json::array({cert.phi.ci_low, cert.phi.ci_high})},
              {"L", cert.L},
              {"psi", weight_to_json<D>(cert.psi)}};
}

template <int D>
DecayCertificate<D> certificate_from_json(const json& j) {
  DecayCertificate<D> cert;
  cert.psi = weight_from_json<D>(j.at("psi"));
  std::vector<Vec<D>> verts;
  for (const auto& row : j.at("S")) {
    Vec<D> v;
    for (int i = 0; i < D; ++i) v.c[i] = row.at(static_cast<std::size_t>(i)).get<std::int64_t>();
    verts.push_back(v);
  }
  cert.S = make_finite_set<D>(std::move(verts), cert.psi);
  cert.p = j.at("p").get<double>();
  cert.phi.value = j.at("phi").get<double>();
  cert.phi.ci_low = j.at("phi_ci").at(0).get<double>();
  cert.phi.ci_high = j.at("phi_ci").at(1).get<double>();
  cert.phi.exact = cert.phi.ci_low == cert.phi.ci_high;
  cert.L = j.at("L").get<std::int64_t>();
  return cert;
}

// --------------------------------------------------------------------------
// Cones: {"generators": [[[num,den],...],...], "inequalities": [...]}.
// Vectors are stored coordinate-wise as [num, den] pairs; this module keeps
// them integral, so den is 1 on output, but rational input is accepted.

namespace detail {

template <int D>
json bvec_to_json(const BVec<D>& v) {
  json row = json::array();
  for (int i = 0; i < D; ++i) {
    const BigInt& x = v[static_cast<std::size_t>(i)];
    if (x > std::numeric_limits<std::int64_t>::max() ||
        x < std::numeric_limits<std::int64_t>::min())
      throw refusal_error("cone coordinate too large for serialization");
    row.push_back(json::array({static_cast<std::int64_t>(x), std::int64_t{1}}));
  }
  return row;
}

template <int D>
std::vector<BVec<D>> bvecs_from_json(const json& arr) {
  std::vector<BVec<D>> out;
  for (const auto& row : arr) {
    if (static_cast<int>(row.size()) != D) throw spec_error("cone vector with wrong arity");
    // Clear denominators: multiply through by the lcm.
    std::vector<std::int64_t> nums(D), dens(D);
    for (int i = 0; i < D; ++i) {
      const auto& pair = row.at(static_cast<std::size_t>(i));
      if (pair.is_array()) {
        nums[static_cast<std::size_t>(i)] = pair.at(0).get<std::int64_t>();
        dens[static_cast<std::size_t>(i)] = pair.at(1).get<std::int64_t>();
      } else {
        nums[static_cast<std::size_t>(i)] = pair.get<std::int64_t>();
        dens[static_cast<std::size_t>(i)] = 1;
      }
      if (dens[static_cast<std::size_t>(i)] == 0) throw spec_error("cone coordinate with zero denominator");
    }
    BigInt lcm = 1;
    for (int i = 0; i < D; ++i) {
      BigInt d = boost::multiprecision::abs(BigInt(dens[static_cast<std::size_t>(i)]));
      lcm = lcm / boost::multiprecision::gcd(lcm, d) * d;
    }
    BVec<D> v;
    for (int i = 0; i < D; ++i)
      v[static_cast<std::size_t>(i)] =
          BigInt(nums[static_cast<std::size_t>(i)]) * lcm / BigInt(dens[static_cast<std::size_t>(i)]);
    out.push_back(reduce_b<D>(v));
  }
  return out;
}

}  // namespace detail

template <int D>
json cone_to_json(const Cone<D>& c) {
  json gens = json::array(), ineqs = json::array();
  for (const auto& g : c.generators) gens.push_back(detail::bvec_to_json<D>(g));
  for (const auto& a : c.inequalities) ineqs.push_back(detail::bvec_to_json<D>(a));
  return json{{"generators", gens}, {"inequalities", ineqs}};
}

template <int D>
Cone<D> cone_from_json(const json& j) {
  if (j.contains("generators") && !j["generators"].empty())
    return cone_from_generators<D>(detail::bvecs_from_json<D>(j["generators"]));
  if (j.contains("inequalities"))
    return cone_from_inequalities<D>(detail::bvecs_from_json<D>(j["inequalities"]));
  throw spec_error("cone json needs generators or inequalities");
}

// --------------------------------------------------------------------------
// Decay constants.

template <int D>
json decay_constants_to_json(const DecayConstants<D>& dc) {
  json verts = json::array();
  for (const auto& v : dc.S.vertices) {
    json row = json::array();
    for (int i = 0; i < D; ++i) row.push_back(v.c[i]);
    verts.push_back(row);
  }
  return json{{"S", verts},      {"alpha", dc.alpha},         {"K", dc.K},
              {"K_point", dc.K_point}, {"M_u", dc.M_u},       {"c", dc.c},
              {"certified", dc.certified}, {"exact", dc.exact}};
}

// --------------------------------------------------------------------------
// Small CSV writer with fixed headers.

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& header) {
    if (path == "-") {
      out_ = &std::cout;
    } else {
      file_.open(path);
      if (!file_) throw refusal_error("cannot open output file: " + path);
      out_ = &file_;
    }
    *out_ << header << "\n";
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) *out_ << ",";
      *out_ << cells[i];
    }
    *out_ << "\n";
  }

 private:
  std::ofstream file_;
  std::ostream* out_ = nullptr;
};

inline json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw spec_error("cannot open file: " + path);
  json j;
  f >> j;
  return j;
}

inline void save_json_file(const std::string& path, const json& j) {
  if (path == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(path);
  if (!f) throw refusal_error("cannot open output file: " + path);
  f << j.dump(2) << "\n";
}

}  // namespace orperc
