#include "lowdim/serialization.hpp"

#include "lowdim/csv.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace lowdim {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const json& field(const json& j, const std::string& name, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
  const auto it = j.find(name);
  if (it == j.end()) throw ConfigError(path + "/" + name, "missing field");
  return *it;
}

int int_field(const json& j, const std::string& name, const std::string& path) {
  const json& v = field(j, name, path);
  if (!v.is_number_integer()) throw ConfigError(path + "/" + name, "expected an integer");
  return v.get<int>();
}

double number_field(const json& j, const std::string& name, const std::string& path) {
  const json& v = field(j, name, path);
  if (!v.is_number()) throw ConfigError(path + "/" + name, "expected a number");
  return v.get<double>();
}

std::vector<double> number_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(path + "/" + std::to_string(i), "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

json matrix_row_major(const Matrix& x) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) arr.push_back(x(i, j));
  }
  return arr;
}

// Wraps construction errors from the descriptor factories with a path.
template <class F>
SetDescriptor guarded(const std::string& path, F&& make) {
  try {
    return make();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path.empty() ? "/" : path, e.what());
  }
}

}  // namespace

json descriptor_to_json(const SetDescriptor& d) {
  json j;
  j["kind"] = to_string(d.kind());
  std::visit(overloaded{
                 [&](const set::Sparse& s) {
                   j["m"] = s.m;
                   j["n"] = s.n;
                   j["s"] = s.s;
                 },
                 [&](const set::FixedSupport& f) {
                   j["m"] = f.m;
                   j["n"] = f.n;
                   json sup = json::array();
                   for (const Entry& e : f.support) sup.push_back({e.row, e.col});
                   j["support"] = sup;
                 },
                 [&](const set::LowRank& l) {
                   j["m"] = l.m;
                   j["n"] = l.n;
                   j["r"] = l.r;
                 },
                 [&](const set::Orthogonal& o) { j["m"] = o.m; },
                 [&](const set::UpperTriangularSparse& u) {
                   j["m"] = u.m;
                   j["n"] = u.n;
                   j["s"] = u.s;
                 },
                 [&](const set::RifsAttractor& a) { j["rifs"] = rifs_to_json(*a.rifs); },
                 [&](const set::Union& u) {
                   json children = json::array();
                   for (const auto& c : u.children) children.push_back(descriptor_to_json(c));
                   j["children"] = children;
                 },
                 [&](const set::MatrixProduct& p) {
                   j["left"] = descriptor_to_json(*p.left);
                   j["right"] = descriptor_to_json(*p.right);
                 },
                 [&](const set::Sum& p) {
                   j["left"] = descriptor_to_json(*p.left);
                   j["right"] = descriptor_to_json(*p.right);
                 },
                 [&](const set::Kronecker& p) {
                   j["left"] = descriptor_to_json(*p.left);
                   j["right"] = descriptor_to_json(*p.right);
                 },
                 [&](const set::MinkowskiDiff& p) {
                   j["left"] = descriptor_to_json(*p.left);
                   j["right"] = descriptor_to_json(*p.right);
                 },
                 [&](const set::GramSquare& g) { j["child"] = descriptor_to_json(*g.child); },
                 [&](const set::BoundedBy& b) {
                   j["child"] = descriptor_to_json(*b.child);
                   j["radius"] = b.radius;
                 },
             },
             d.node());
  return j;
}

SetDescriptor descriptor_from_json(const json& j, const std::string& path) {
  const json& kind_field = field(j, "kind", path);
  if (!kind_field.is_string()) throw ConfigError(path + "/kind", "expected a string");
  const std::string kind = kind_field.get<std::string>();
  const auto child = [&](const std::string& name) {
    return descriptor_from_json(field(j, name, path), path + "/" + name);
  };

  if (kind == "sparse") {
    return guarded(path, [&] {
      return SetDescriptor::sparse(int_field(j, "m", path), int_field(j, "n", path),
                                   int_field(j, "s", path));
    });
  }
  if (kind == "fixed_support") {
    const json& sup = field(j, "support", path);
    if (!sup.is_array()) throw ConfigError(path + "/support", "expected an array of pairs");
    std::vector<Entry> entries;
    for (std::size_t i = 0; i < sup.size(); ++i) {
      const json& e = sup[i];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
          !e[1].is_number_integer()) {
        throw ConfigError(path + "/support/" + std::to_string(i),
                          "expected [row, col] integers");
      }
      entries.push_back({e[0].get<int>(), e[1].get<int>()});
    }
    return guarded(path, [&] {
      return SetDescriptor::fixed_support(int_field(j, "m", path), int_field(j, "n", path),
                                          entries);
    });
  }
  if (kind == "low_rank") {
    return guarded(path, [&] {
      return SetDescriptor::low_rank(int_field(j, "m", path), int_field(j, "n", path),
                                     int_field(j, "r", path));
    });
  }
  if (kind == "orthogonal") {
    return guarded(path, [&] { return SetDescriptor::orthogonal(int_field(j, "m", path)); });
  }
  if (kind == "upper_triangular_sparse") {
    return guarded(path, [&] {
      return SetDescriptor::upper_triangular_sparse(
          int_field(j, "m", path), int_field(j, "n", path), int_field(j, "s", path));
    });
  }
  if (kind == "rifs_attractor") {
    auto rifs = std::make_shared<const Rifs>(rifs_from_json(field(j, "rifs", path), path + "/rifs"));
    return SetDescriptor::rifs_attractor(std::move(rifs));
  }
  if (kind == "union") {
    const json& arr = field(j, "children", path);
    if (!arr.is_array()) throw ConfigError(path + "/children", "expected an array");
    std::vector<SetDescriptor> children;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      children.push_back(descriptor_from_json(arr[i], path + "/children/" + std::to_string(i)));
    }
    return guarded(path, [&] { return SetDescriptor::set_union(children); });
  }
  if (kind == "matrix_product" || kind == "sum" || kind == "kronecker" ||
      kind == "minkowski_diff") {
    const SetDescriptor l = child("left");
    const SetDescriptor r = child("right");
    return guarded(path, [&] {
      if (kind == "matrix_product") return SetDescriptor::product(l, r);
      if (kind == "sum") return SetDescriptor::sum(l, r);
      if (kind == "kronecker") return SetDescriptor::kronecker(l, r);
      return SetDescriptor::difference(l, r);
    });
  }
  if (kind == "gram_square") {
    const SetDescriptor c = child("child");
    return SetDescriptor::gram_square(c);
  }
  if (kind == "bounded_by") {
    const SetDescriptor c = child("child");
    const double radius = number_field(j, "radius", path);
    return guarded(path, [&] { return SetDescriptor::bounded_by(c, radius); });
  }
  throw ConfigError(path + "/kind", "unknown set kind '" + kind + "'");
}

json rifs_to_json(const Rifs& rifs) {
  json j;
  j["m"] = rifs.ambient_dim();
  j["R"] = rifs.domain_radius();
  json maps = json::array();
  for (const auto& w : rifs.maps()) {
    json mj;
    mj["scale"] = w.scale;
    mj["rotation"] = matrix_row_major(w.rotation);
    mj["translation"] = matrix_row_major(w.translation.transpose());
    maps.push_back(mj);
  }
  j["maps"] = maps;
  j["P"] = matrix_row_major(rifs.transition());
  return j;
}

Rifs rifs_from_json(const json& j, const std::string& path) {
  const int m = int_field(j, "m", path);
  const double radius = number_field(j, "R", path);
  const json& maps_json = field(j, "maps", path);
  if (!maps_json.is_array() || maps_json.empty()) {
    throw ConfigError(path + "/maps", "expected a nonempty array");
  }
  if (m < 1) throw ConfigError(path + "/m", "must be positive");
  std::vector<Similitude> maps;
  for (std::size_t i = 0; i < maps_json.size(); ++i) {
    const std::string mpath = path + "/maps/" + std::to_string(i);
    const json& mj = maps_json[i];
    Similitude w;
    w.scale = number_field(mj, "scale", mpath);
    w.rotation = Matrix::Identity(m, m);
    if (mj.contains("rotation")) {
      const auto rot = number_array(mj["rotation"], mpath + "/rotation");
      if (rot.size() != static_cast<std::size_t>(m) * m) {
        throw ConfigError(mpath + "/rotation", "expected m*m entries");
      }
      for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) w.rotation(r, c) = rot[static_cast<std::size_t>(r * m + c)];
      }
    }
    const auto t = number_array(field(mj, "translation", mpath), mpath + "/translation");
    if (t.size() != static_cast<std::size_t>(m)) {
      throw ConfigError(mpath + "/translation", "expected m entries");
    }
    w.translation = Eigen::Map<const Vector>(t.data(), m);
    maps.push_back(std::move(w));
  }
  const auto n = static_cast<int>(maps.size());
  const auto p = number_array(field(j, "P", path), path + "/P");
  if (p.size() != static_cast<std::size_t>(n) * n) {
    throw ConfigError(path + "/P", "expected n*n row-major entries");
  }
  Matrix transition(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) transition(r, c) = p[static_cast<std::size_t>(r * n + c)];
  }
  try {
    return Rifs(m, radius, std::move(maps), std::move(transition));
  } catch (const std::exception& e) {
    throw ConfigError(path.empty() ? "/" : path, e.what());
  }
}

json estimate_to_json(const DimensionEstimate& est) {
  json j;
  j["slope"] = est.slope;
  j["intercept"] = est.intercept;
  j["r_squared"] = est.r_squared;
  j["delta_grid"] = est.delta_grid;
  j["counts"] = est.counts;
  j["used"] = est.used;
  j["accepted"] = est.accepted;
  return j;
}

PointCloud read_cloud_csv(std::istream& in) {
  std::vector<double> coords;
  int dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int count = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        coords.push_back(parse_number(cell));
      } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line_no), "not a number: '" + cell + "'");
      }
      ++count;
    }
    if (dim == 0) dim = count;
    if (count != dim) {
      throw ConfigError("line " + std::to_string(line_no),
                        "expected " + std::to_string(dim) + " coordinates");
    }
  }
  if (dim == 0) throw ConfigError("cloud", "no points");
  return PointCloud(dim, std::move(coords));
}

void write_attractor_csv(std::ostream& out, const AttractorSample& sample) {
  CsvTable table;
  table.header.push_back("component");
  const std::size_t m =
      sample.components.empty() || sample.components.front().empty()
          ? 0
          : static_cast<std::size_t>(sample.components.front().front().size());
  for (std::size_t c = 0; c < m; ++c) table.header.push_back("x_" + std::to_string(c + 1));
  for (std::size_t i = 0; i < sample.components.size(); ++i) {
    for (const Vector& p : sample.components[i]) {
      std::vector<std::string> row{std::to_string(i)};
      for (Eigen::Index c = 0; c < p.size(); ++c) row.push_back(format_number(p[c]));
      table.rows.push_back(std::move(row));
    }
  }
  write_csv(out, table);
}

}  // namespace lowdim
