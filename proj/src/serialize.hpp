#pragma once

#include <json.hpp>
#include <string>

#include "covariance.hpp"
#include "tphi.hpp"

namespace tphi {

using Json = nlohmann::json;

// Exact JSON encodings: rationals travel as "p/q" strings so every round trip
// is bit-identical, keys as [species, conj, site] triples, layouts embedded in
// the objects that need them to re-anchor on load.
Json json_of_rat(const Rat& r);
Rat rat_of_json(const Json& j);

Json json_of_rc(const RC& c);
RC rc_of_json(const Json& j);

Json json_of_key(Key k);
Key key_of_json(const Json& j);

Json json_of_seq(const IndexSeq& z);
IndexSeq seq_of_json(const Json& j);

Json json_of_layout(const Layout& l);
LayoutPtr layout_of_json(const Json& j);

Json json_of_field(const FieldAssign& phi);
FieldAssign field_of_json(const Json& j);

Json json_of_matrix(const RatMat& m);
RatMat matrix_of_json(const Json& j);

Json json_of_element(const Element& f);
Element element_of_json(const Json& j);

Json json_of_testfn(const TestFunction& g);
TestFunction testfn_of_json(const Json& j);

Json json_of_certificate(const NormCertificate& c);
NormCertificate certificate_of_json(const Json& j);

// Single-line dump (the record format for report and certificate streams).
std::string json_line(const Json& j);

// Parse with errors that name the byte offset; wraps the library exception.
Json parse_json_text(const std::string& text);

}  // namespace tphi
