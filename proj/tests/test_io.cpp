#include "lowdim/csv.hpp"
#include "lowdim/serialization.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <sstream>

using namespace lowdim;
using nlohmann::json;

namespace {

using SD = SetDescriptor;

std::string config_error_path(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

json cantor_json() {
  return json::parse(R"({"m": 1, "R": 1,
    "maps": [{"scale": 0.3333333333333333, "translation": [0]},
             {"scale": 0.3333333333333333, "translation": [0.6666666666666666]}],
    "P": [0.5, 0.5, 0.5, 0.5]})");
}

}  // namespace

TEST(Csv, FormatNumber) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(format_number(-1.5e-10), "-1.5e-10");
  EXPECT_EQ(format_number(static_cast<long long>(-7)), "-7");
  EXPECT_EQ(format_number(std::size_t{42}), "42");
  Rng rng(1);
  std::normal_distribution<double> g;
  for (int i = 0; i < 1000; ++i) {
    const double v = g(rng) * std::pow(10.0, static_cast<int>(g(rng) * 5));
    EXPECT_EQ(parse_number(format_number(v)), v);
  }
}

TEST(Csv, ParseNumberIsStrict) {
  EXPECT_EQ(parse_number("1e3"), 1000.0);
  EXPECT_EQ(parse_number("-0.25"), -0.25);
  EXPECT_THROW(parse_number(""), std::invalid_argument);
  EXPECT_THROW(parse_number("1,5"), std::invalid_argument);
  EXPECT_THROW(parse_number("2x"), std::invalid_argument);
}

TEST(Csv, RoundTripWithQuoting) {
  CsvTable t;
  t.header = {"name", "value", "note"};
  t.rows = {{"plain", "1", ""},
            {"with,comma", "2.5", "say \"hi\""},
            {"line\nbreak", "-3", "x"}};
  std::ostringstream out;
  write_csv(out, t);
  EXPECT_NE(out.str().find("\"with,comma\""), std::string::npos);
  EXPECT_NE(out.str().find("\"say \"\"hi\"\"\""), std::string::npos);
  EXPECT_NE(out.str().find("\r\n"), std::string::npos);
  std::istringstream in(out.str());
  const CsvTable back = read_csv(in);
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(back.column("note"), 2u);
  EXPECT_THROW(back.column("missing"), std::out_of_range);
}

TEST(Csv, RejectsMalformed) {
  std::istringstream ragged("a,b\r\n1\r\n");
  EXPECT_THROW(read_csv(ragged), std::runtime_error);
  std::istringstream quote("a,b\r\n\"1,2\r\n");
  EXPECT_THROW(read_csv(quote), std::runtime_error);
}

TEST(Csv, AcceptsBareNewlines) {
  std::istringstream in("a,b\n1,2\n3,4\n");
  const CsvTable t = read_csv(in);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][1], "4");
}

TEST(DescriptorJson, RoundTrip) {
  const auto rifs = std::make_shared<const Rifs>(rifs_from_json(cantor_json()));
  const std::vector<SD> all = {
      SD::sparse(3, 3, 1),
      SD::fixed_support(2, 2, {{0, 0}, {1, 1}}),
      SD::low_rank(3, 4, 2),
      SD::orthogonal(3),
      SD::upper_triangular_sparse(3, 3, 2),
      SD::rifs_attractor(rifs),
      SD::set_union({SD::sparse(2, 2, 1), SD::low_rank(2, 2, 1)}),
      SD::product(SD::orthogonal(3), SD::upper_triangular_sparse(3, 3, 2)),
      SD::sum(SD::sparse(2, 2, 1), SD::sparse(2, 2, 1)),
      SD::kronecker(SD::sparse(1, 2, 1), SD::low_rank(2, 2, 1)),
      SD::difference(SD::low_rank(3, 3, 1), SD::low_rank(3, 3, 1)),
      SD::gram_square(SD::low_rank(3, 2, 1)),
      SD::bounded_by(SD::low_rank(2, 2, 1), 1.5),
  };
  for (const SD& d : all) {
    const json j = descriptor_to_json(d);
    const SD back = descriptor_from_json(json::parse(j.dump()));
    EXPECT_TRUE(back == d) << j.dump();
    EXPECT_EQ(descriptor_to_json(back), j);
  }
}

TEST(DescriptorJson, ErrorPaths) {
  EXPECT_EQ(config_error_path([] { descriptor_from_json(json::parse(R"({"kind": "sparse", "m": 3, "n": 3})")); }),
            "/s");
  EXPECT_EQ(config_error_path([] { descriptor_from_json(json::parse(R"({"kind": "blob"})")); }),
            "/kind");
  EXPECT_EQ(config_error_path([] {
              descriptor_from_json(json::parse(
                  R"({"kind": "sum", "left": {"kind": "sparse", "m": 2, "n": 2, "s": 1},
                      "right": {"kind": "low_rank", "m": 2, "n": 2, "r": "one"}})"));
            }),
            "/right/r");
  EXPECT_EQ(config_error_path([] {
              descriptor_from_json(json::parse(
                  R"({"kind": "union", "children": [{"kind": "orthogonal", "m": 2},
                      {"kind": "orthogonal"}]})"));
            }),
            "/children/1/m");
  EXPECT_EQ(config_error_path([] {
              descriptor_from_json(json::parse(R"({"kind": "sparse", "m": 3, "n": 3, "s": 1.5})"),
                                   "/descriptor");
            }),
            "/descriptor/s");
  // factory validation surfaces as a config error too
  EXPECT_NE(config_error_path([] {
              descriptor_from_json(json::parse(R"({"kind": "sparse", "m": 3, "n": 3, "s": 10})"));
            }),
            "<no error>");
}

TEST(RifsJson, RoundTrip) {
  const Rifs r = rifs_from_json(cantor_json());
  EXPECT_EQ(r.ambient_dim(), 1);
  EXPECT_EQ(r.maps().size(), 2u);
  const json j = rifs_to_json(r);
  const Rifs back = rifs_from_json(json::parse(j.dump()));
  EXPECT_EQ(rifs_to_json(back), j);
  EXPECT_NEAR(contraction_dimension(back), std::log(2.0) / std::log(3.0), 1e-9);
}

TEST(RifsJson, ErrorPaths) {
  json j = cantor_json();
  j["maps"][1]["translation"] = json::array({0.1, 0.2});
  EXPECT_EQ(config_error_path([&] { rifs_from_json(j, "/rifs"); }), "/rifs/maps/1/translation");

  j = cantor_json();
  j["P"] = json::array({0.5, 0.5});
  EXPECT_EQ(config_error_path([&] { rifs_from_json(j); }), "/P");

  j = cantor_json();
  j["P"] = json::array({0.5, 0.5, 0.3, 0.3});  // rows no longer sum to one
  EXPECT_NE(config_error_path([&] { rifs_from_json(j); }), "<no error>");

  j = cantor_json();
  j["maps"] = json::array();
  EXPECT_EQ(config_error_path([&] { rifs_from_json(j); }), "/maps");
}

TEST(CloudCsv, ReadsPoints) {
  std::istringstream in("0,0\n1,2.5\n\n-1,3\n");
  const PointCloud c = read_cloud_csv(in);
  EXPECT_EQ(c.dim(), 2);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.point(1)[1], 2.5);

  std::istringstream ragged("0,0\n1\n");
  EXPECT_EQ(config_error_path([&] { read_cloud_csv(ragged); }), "line 2");
  std::istringstream junk("0,zero\n");
  EXPECT_EQ(config_error_path([&] { read_cloud_csv(junk); }), "line 1");
  std::istringstream empty("");
  EXPECT_THROW(read_cloud_csv(empty), ConfigError);
}

TEST(AttractorCsv, Columns) {
  const Rifs r = rifs_from_json(cantor_json());
  const auto sample = attractor_points(r, 20, 50, 3);
  std::ostringstream out;
  write_attractor_csv(out, sample);
  std::istringstream in(out.str());
  const CsvTable t = read_csv(in);
  EXPECT_EQ(t.header, (std::vector<std::string>{"component", "x_1"}));
  ASSERT_EQ(t.rows.size(), 40u);
  for (const auto& row : t.rows) {
    const double x = parse_number(row[1]);
    const int comp = std::stoi(row[0]);
    EXPECT_GE(x, comp == 0 ? -1e-12 : 2.0 / 3.0 - 1e-12);
    EXPECT_LE(x, comp == 0 ? 1.0 / 3.0 + 1e-12 : 1.0 + 1e-12);
  }
}
