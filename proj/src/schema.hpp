#ifndef CBF_SCHEMA_HPP
#define CBF_SCHEMA_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "packet.hpp"

namespace cbf {

// Discrete attribute value. kValueNone stands for fields a packet does not
// carry (e.g. ports on a non-TCP/UDP packet).
using AttrValue = std::int64_t;
inline constexpr AttrValue kValueNone = -1;

using AttributeVector = std::vector<AttrValue>;

enum class FieldId : int {
    Protocol,
    Ttl,
    SrcAddr,
    DstAddr,
    SrcPort,
    DstPort,
    TcpFlags,
    TotalLength,
    Tos,
};

const char* field_name(FieldId f);
std::optional<FieldId> field_from_name(const std::string& name);

struct Discretizer {
    enum class Kind : int { Identity, ShiftRight, Bucket };
    Kind kind = Kind::Identity;
    std::uint32_t param = 0; // bits for ShiftRight, size for Bucket

    AttrValue apply(std::optional<std::uint32_t> raw) const;

    bool operator==(const Discretizer&) const = default;
};

struct AttributeDef {
    std::string name;
    FieldId field = FieldId::Protocol;
    Discretizer discretizer;

    bool operator==(const AttributeDef&) const = default;
};

struct AttributeSchema {
    std::vector<AttributeDef> attributes;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs; // normalized r < s
    std::vector<double> weights; // one per pair

    std::size_t attribute_count() const { return attributes.size(); }
    std::size_t pair_count() const { return pairs.size(); }
    double weight_sum() const;

    // Enforces: n >= 2, non-empty normalized pair set with indices < n,
    // non-negative weights with positive sum, distinct attribute names.
    void validate() const;

    nlohmann::json to_json() const;
    static AttributeSchema from_json(const nlohmann::json& j);
    static AttributeSchema load_file(const std::string& path);

    bool operator==(const AttributeSchema&) const = default;
};

// Seven network/transport-layer attributes: protocol, ttl, source /24 prefix,
// dst port, tcp flags, total-length bucket (256-octet bins), tos; all 21
// unordered pairs at uniform weight.
AttributeSchema default_schema();

AttributeVector extract_attributes(const ParsedPacket& packet, const AttributeSchema& schema);

} // namespace cbf

#endif
