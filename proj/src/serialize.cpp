#include "serialize.hpp"

#include <stdexcept>

namespace tphi {

Json json_of_rat(const Rat& r) { return rat_str(r); }

Rat rat_of_json(const Json& j) {
  if (!j.is_string()) throw std::runtime_error("rational: expected \"p/q\" string");
  try {
    return Rat(j.get<std::string>());
  } catch (const std::exception&) {
    throw std::runtime_error("rational: cannot parse '" + j.get<std::string>() + "'");
  }
}

Json json_of_rc(const RC& c) { return Json::array({json_of_rat(c.re), json_of_rat(c.im)}); }

RC rc_of_json(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw std::runtime_error("complex: expected [re, im]");
  return RC(rat_of_json(j[0]), rat_of_json(j[1]));
}

Json json_of_key(Key k) {
  return Json::array({int(key_species(k)), int(key_conj(k)), long(key_site(k))});
}

Key key_of_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw std::runtime_error("key: expected [species, conj, site]");
  int sp = j[0].get<int>(), conj = j[1].get<int>();
  long site = j[2].get<long>();
  if (sp < 0 || conj < 0 || conj > 1 || site < 0) throw std::runtime_error("key: field out of range");
  return pack(uint16_t(sp), uint8_t(conj), uint32_t(site));
}

Json json_of_seq(const IndexSeq& z) {
  Json a = Json::array();
  for (Key k : z) a.push_back(json_of_key(k));
  return a;
}

IndexSeq seq_of_json(const Json& j) {
  IndexSeq z;
  for (const Json& e : j) z.push_back(key_of_json(e));
  return z;
}

Json json_of_layout(const Layout& l) {
  Json species = Json::array();
  for (const Species& s : l.species)
    species.push_back(Json{{"name", s.name},
                           {"kind", s.kind == Kind::boson ? "boson" : "fermion"},
                           {"primed_of", s.primed_of}});
  return Json{{"torus", Json{{"d", l.torus.d}, {"R", l.torus.R}, {"m", l.torus.m}}},
              {"species", species}};
}

LayoutPtr layout_of_json(const Json& j) {
  const Json& t = j.at("torus");
  Torus torus{t.at("d").get<int>(), t.at("R").get<int>(), t.at("m").get<int>()};
  if (torus.d < 1 || torus.R < 1 || torus.m < 1) throw std::runtime_error("torus: d, R, m must be positive");
  std::vector<Species> sp;
  for (const Json& s : j.at("species")) {
    std::string kind = s.at("kind").get<std::string>();
    if (kind != "boson" && kind != "fermion") throw std::runtime_error("species: kind must be boson|fermion");
    sp.push_back(Species{s.at("name").get<std::string>(),
                         kind == "boson" ? Kind::boson : Kind::fermion,
                         s.at("primed_of").get<int>()});
  }
  if (sp.empty()) throw std::runtime_error("species: empty list");
  return make_layout(torus, std::move(sp));
}

Json json_of_field(const FieldAssign& phi) {
  Json a = Json::array();
  for (const auto& [k, c] : phi.v) a.push_back(Json::array({json_of_key(k), json_of_rc(c)}));
  return Json{{"values", a}};
}

FieldAssign field_of_json(const Json& j) {
  FieldAssign phi;
  for (const Json& e : j.at("values")) phi.set(key_of_json(e.at(0)), rc_of_json(e.at(1)));
  return phi;
}

Json json_of_matrix(const RatMat& m) {
  Json rows = Json::array();
  for (const auto& row : m) {
    Json r = Json::array();
    for (const Rat& v : row) r.push_back(json_of_rat(v));
    rows.push_back(r);
  }
  return rows;
}

RatMat matrix_of_json(const Json& j) {
  RatMat m;
  for (const Json& row : j) {
    m.emplace_back();
    for (const Json& v : row) m.back().push_back(rat_of_json(v));
  }
  for (const auto& row : m)
    if (row.size() != m.size()) throw std::runtime_error("matrix: must be square");
  return m;
}

namespace {

Json json_of_poly(const Poly& p) {
  Json terms = Json::array();
  for (const auto& [deg, c] : p.t) {
    Json d = Json::array();
    for (const auto& [k, e] : deg) d.push_back(Json::array({json_of_key(k), e}));
    terms.push_back(Json::array({d, json_of_rc(c)}));
  }
  return terms;
}

Poly poly_of_json(const Json& j) {
  Poly p;
  for (const Json& term : j) {
    MultiDeg d;
    for (const Json& f : term.at(0)) d.emplace_back(key_of_json(f.at(0)), f.at(1).get<uint32_t>());
    p.add_term(d, rc_of_json(term.at(1)));
  }
  return p;
}

}  // namespace

Json json_of_element(const Element& f) {
  Json terms = Json::array();
  for (const auto& [mono, poly] : f.terms)
    terms.push_back(Json::array({json_of_seq(mono), json_of_poly(poly)}));
  return Json{{"layout", json_of_layout(*f.layout)},
              {"truncation_degree", f.truncation_degree},
              {"terms", terms}};
}

Element element_of_json(const Json& j) {
  LayoutPtr l = layout_of_json(j.at("layout"));
  Element f = Element::zero(l);
  f.truncation_degree = j.value("truncation_degree", -1);
  for (const Json& term : j.at("terms")) {
    Mono mono = seq_of_json(term.at(0));
    f.add(std::move(mono), poly_of_json(term.at(1)));
  }
  return f;
}

Json json_of_testfn(const TestFunction& g) {
  Json entries = Json::array();
  for (const auto& [z, c] : g.v) entries.push_back(Json::array({json_of_seq(z), json_of_rc(c)}));
  return Json{{"layout", json_of_layout(*g.layout)},
              {"pn_cap", g.pn_cap},
              {"len_cap", g.len_cap},
              {"values", entries}};
}

TestFunction testfn_of_json(const Json& j) {
  TestFunction g{layout_of_json(j.at("layout")), j.at("pn_cap").get<int>(),
                 j.at("len_cap").get<int>(), {}};
  for (const Json& e : j.at("values")) g.set(seq_of_json(e.at(0)), rc_of_json(e.at(1)));
  return g;
}

Json json_of_certificate(const NormCertificate& c) {
  Json opt = Json::array();
  for (const auto& [z, v] : c.optimizer) opt.push_back(Json::array({json_of_seq(z), json_of_rc(v)}));
  return Json{{"mode", c.mode},
              {"value", c.value},
              {"exact", c.exact},
              {"exact_value", json_of_rat(c.exact_value)},
              {"rigor_factor", c.rigor_factor},
              {"p_phi", c.p_phi},
              {"pn_cap", c.pn_cap},
              {"len_cap", c.len_cap},
              {"rotations", c.rotations},
              {"best_rotation", c.best_rotation},
              {"nvars", c.nvars},
              {"nrows", c.nrows},
              {"optimizer", opt}};
}

NormCertificate certificate_of_json(const Json& j) {
  NormCertificate c;
  c.mode = j.at("mode").get<std::string>();
  c.value = j.at("value").get<double>();
  c.exact = j.at("exact").get<bool>();
  c.exact_value = rat_of_json(j.at("exact_value"));
  c.rigor_factor = j.at("rigor_factor").get<double>();
  c.p_phi = j.at("p_phi").get<int>();
  c.pn_cap = j.at("pn_cap").get<int>();
  c.len_cap = j.at("len_cap").get<int>();
  c.rotations = j.at("rotations").get<int>();
  c.best_rotation = j.at("best_rotation").get<int>();
  c.nvars = j.at("nvars").get<int>();
  c.nrows = j.at("nrows").get<int>();
  for (const Json& e : j.at("optimizer")) c.optimizer[seq_of_json(e.at(0))] = rc_of_json(e.at(1));
  return c;
}

std::string json_line(const Json& j) { return j.dump(); }

Json parse_json_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw std::runtime_error("parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

}  // namespace tphi
