#include "schema.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "error.hpp"

namespace cbf {

namespace {

std::optional<std::uint32_t> raw_field(const ParsedPacket& p, FieldId f) {
    switch (f) {
    case FieldId::Protocol: return p.protocol;
    case FieldId::Ttl: return p.ttl;
    case FieldId::SrcAddr: return p.src_addr;
    case FieldId::DstAddr: return p.dst_addr;
    case FieldId::SrcPort:
        if (p.transport.src_port) return std::uint32_t(*p.transport.src_port);
        return std::nullopt;
    case FieldId::DstPort:
        if (p.transport.dst_port) return std::uint32_t(*p.transport.dst_port);
        return std::nullopt;
    case FieldId::TcpFlags:
        if (p.transport.tcp_flags) return std::uint32_t(*p.transport.tcp_flags);
        return std::nullopt;
    case FieldId::TotalLength: return p.total_length;
    case FieldId::Tos: return p.tos;
    }
    return std::nullopt;
}

const char* discretizer_kind_name(Discretizer::Kind k) {
    switch (k) {
    case Discretizer::Kind::Identity: return "identity";
    case Discretizer::Kind::ShiftRight: return "shift_right";
    case Discretizer::Kind::Bucket: return "bucket";
    }
    return "identity";
}

} // namespace

const char* field_name(FieldId f) {
    switch (f) {
    case FieldId::Protocol: return "protocol";
    case FieldId::Ttl: return "ttl";
    case FieldId::SrcAddr: return "src_addr";
    case FieldId::DstAddr: return "dst_addr";
    case FieldId::SrcPort: return "src_port";
    case FieldId::DstPort: return "dst_port";
    case FieldId::TcpFlags: return "tcp_flags";
    case FieldId::TotalLength: return "total_length";
    case FieldId::Tos: return "tos";
    }
    return "protocol";
}

std::optional<FieldId> field_from_name(const std::string& name) {
    static const std::pair<const char*, FieldId> table[] = {
        {"protocol", FieldId::Protocol},   {"ttl", FieldId::Ttl},
        {"src_addr", FieldId::SrcAddr},    {"dst_addr", FieldId::DstAddr},
        {"src_port", FieldId::SrcPort},    {"dst_port", FieldId::DstPort},
        {"tcp_flags", FieldId::TcpFlags},  {"total_length", FieldId::TotalLength},
        {"tos", FieldId::Tos},
    };
    for (const auto& [n, f] : table)
        if (name == n) return f;
    return std::nullopt;
}

AttrValue Discretizer::apply(std::optional<std::uint32_t> raw) const {
    if (!raw)
        return kValueNone;
    switch (kind) {
    case Kind::Identity: return AttrValue(*raw);
    case Kind::ShiftRight: return AttrValue(*raw >> (param >= 32 ? 31 : param));
    case Kind::Bucket: return AttrValue(*raw / (param == 0 ? 1 : param));
    }
    return AttrValue(*raw);
}

double AttributeSchema::weight_sum() const {
    double s = 0.0;
    for (double w : weights)
        s += w;
    return s;
}

void AttributeSchema::validate() const {
    const std::size_t n = attributes.size();
    if (n < 2)
        fail(Status::InvalidArgument, "schema needs at least 2 attributes");
    if (pairs.empty())
        fail(Status::InvalidArgument, "schema pair set is empty");
    if (weights.size() != pairs.size())
        fail(Status::InvalidArgument, "weights count does not match pair count");
    std::set<std::string> names;
    for (const auto& a : attributes)
        if (!names.insert(a.name).second)
            fail(Status::InvalidArgument, "duplicate attribute name '" + a.name + "'");
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
    for (const auto& [r, s] : pairs) {
        if (r >= s)
            fail(Status::InvalidArgument, "pair indices must satisfy r < s");
        if (s >= n)
            fail(Status::InvalidArgument, "pair index out of range");
        if (!seen.insert({r, s}).second)
            fail(Status::InvalidArgument, "duplicate pair in pair set");
    }
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0))
            fail(Status::InvalidArgument, "weights must be non-negative");
        sum += w;
    }
    if (!(sum > 0.0))
        fail(Status::InvalidArgument, "weight sum must be positive");
}

nlohmann::json AttributeSchema::to_json() const {
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& a : attributes) {
        nlohmann::json d;
        d["kind"] = discretizer_kind_name(a.discretizer.kind);
        if (a.discretizer.kind == Discretizer::Kind::ShiftRight)
            d["bits"] = a.discretizer.param;
        else if (a.discretizer.kind == Discretizer::Kind::Bucket)
            d["size"] = a.discretizer.param;
        attrs.push_back({{"name", a.name}, {"field", field_name(a.field)}, {"discretizer", d}});
    }
    nlohmann::json pj = nlohmann::json::array();
    for (const auto& [r, s] : pairs)
        pj.push_back({r, s});
    return {{"attributes", attrs}, {"pairs", pj}, {"weights", weights}};
}

AttributeSchema AttributeSchema::from_json(const nlohmann::json& j) {
    AttributeSchema schema;
    try {
        for (const auto& a : j.at("attributes")) {
            AttributeDef def;
            def.name = a.at("name").get<std::string>();
            const auto fname = a.at("field").get<std::string>();
            const auto f = field_from_name(fname);
            if (!f)
                fail(Status::CorruptDocument, "unknown field '" + fname + "'");
            def.field = *f;
            const auto& d = a.at("discretizer");
            const auto kind = d.at("kind").get<std::string>();
            if (kind == "identity") {
                def.discretizer = {Discretizer::Kind::Identity, 0};
            } else if (kind == "shift_right") {
                def.discretizer = {Discretizer::Kind::ShiftRight, d.at("bits").get<std::uint32_t>()};
            } else if (kind == "bucket") {
                def.discretizer = {Discretizer::Kind::Bucket, d.at("size").get<std::uint32_t>()};
            } else {
                fail(Status::CorruptDocument, "unknown discretizer kind '" + kind + "'");
            }
            schema.attributes.push_back(std::move(def));
        }
        for (const auto& p : j.at("pairs")) {
            if (!p.is_array() || p.size() != 2)
                fail(Status::CorruptDocument, "pair entries must be [r, s]");
            schema.pairs.emplace_back(p[0].get<std::uint32_t>(), p[1].get<std::uint32_t>());
        }
        schema.weights = j.at("weights").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        fail(Status::CorruptDocument, std::string("schema document: ") + e.what());
    }
    schema.validate();
    return schema;
}

AttributeSchema AttributeSchema::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        fail(Status::Io, "cannot open schema file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(Status::CorruptDocument, std::string("schema document: ") + e.what());
    }
    return from_json(j);
}

AttributeSchema default_schema() {
    AttributeSchema s;
    s.attributes = {
        {"protocol", FieldId::Protocol, {Discretizer::Kind::Identity, 0}},
        {"ttl", FieldId::Ttl, {Discretizer::Kind::Identity, 0}},
        {"src_prefix24", FieldId::SrcAddr, {Discretizer::Kind::ShiftRight, 8}},
        {"dst_port", FieldId::DstPort, {Discretizer::Kind::Identity, 0}},
        {"tcp_flags", FieldId::TcpFlags, {Discretizer::Kind::Identity, 0}},
        {"length_bucket", FieldId::TotalLength, {Discretizer::Kind::Bucket, 256}},
        {"tos", FieldId::Tos, {Discretizer::Kind::Identity, 0}},
    };
    const auto n = std::uint32_t(s.attributes.size());
    for (std::uint32_t r = 0; r < n; ++r)
        for (std::uint32_t t = r + 1; t < n; ++t)
            s.pairs.emplace_back(r, t);
    s.weights.assign(s.pairs.size(), 1.0);
    return s;
}

AttributeVector extract_attributes(const ParsedPacket& packet, const AttributeSchema& schema) {
    AttributeVector values;
    values.reserve(schema.attributes.size());
    for (const auto& a : schema.attributes)
        values.push_back(a.discretizer.apply(raw_field(packet, a.field)));
    return values;
}

} // namespace cbf
