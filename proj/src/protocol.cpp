#include "vlpfleet/protocol.hpp"

#include <array>
#include <cmath>

namespace vlp {

using ojson = nlohmann::ordered_json;

namespace {

constexpr std::array<std::pair<MessageType, const char*>, 9> kTypeNames{{
    {MessageType::Hello, "HELLO"},
    {MessageType::MapReq, "MAP_REQ"},
    {MessageType::Map, "MAP"},
    {MessageType::Pose, "POSE"},
    {MessageType::VlpFix, "VLP_FIX"},
    {MessageType::Goal, "GOAL"},
    {MessageType::GoalStatus, "GOAL_STATUS"},
    {MessageType::Metric, "METRIC"},
    {MessageType::Error, "ERROR"},
}};

[[noreturn]] void schema(const std::string& what) { throw ProtocolError(ProtocolErrc::SchemaViolation, what); }

const ojson& field(const ojson& payload, const char* key) {
    const auto it = payload.find(key);
    if (it == payload.end()) schema(std::string("payload.") + key + " is missing");
    return *it;
}

double number(const ojson& payload, const char* key) {
    const ojson& v = field(payload, key);
    if (!v.is_number()) schema(std::string("payload.") + key + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) schema(std::string("payload.") + key + " must be finite");
    return d;
}

const std::string& text(const ojson& payload, const char* key) {
    const ojson& v = field(payload, key);
    if (!v.is_string()) schema(std::string("payload.") + key + " must be a string");
    return v.get_ref<const std::string&>();
}

bool flag(const ojson& payload, const char* key) {
    const ojson& v = field(payload, key);
    if (!v.is_boolean()) schema(std::string("payload.") + key + " must be a boolean");
    return v.get<bool>();
}

std::uint64_t count(const ojson& payload, const char* key) {
    const ojson& v = field(payload, key);
    // Values built in memory from signed ints arrive as number_integer.
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        schema(std::string("payload.") + key + " must be a non-negative integer");
    return v.get<std::uint64_t>();
}

void validate_payload(MessageType type, const ojson& p) {
    switch (type) {
        case MessageType::Hello: {
            const std::string& role = text(p, "role");
            if (role != "robot" && role != "console") schema("payload.role must be robot or console");
            break;
        }
        case MessageType::MapReq:
            break;
        case MessageType::Map: {
            if (number(p, "resolution_m") <= 0.0) schema("payload.resolution_m must be positive");
            number(p, "origin_x_m");
            number(p, "origin_y_m");
            const std::uint64_t w = count(p, "width");
            const std::uint64_t h = count(p, "height");
            const std::string& cells = text(p, "cells");
            if (cells.size() != w * h) schema("payload.cells must hold width*height entries");
            if (cells.find_first_not_of("01") != std::string::npos) schema("payload.cells must be 0/1");
            if (!field(p, "beacons").is_array()) schema("payload.beacons must be an array");
            break;
        }
        case MessageType::Pose: {
            number(p, "x");
            number(p, "y");
            number(p, "theta");
            const ojson& cov = field(p, "cov");
            if (!cov.is_array() || cov.size() != 9) schema("payload.cov must be 9 numbers");
            for (const auto& c : cov)
                if (!c.is_number()) schema("payload.cov must be 9 numbers");
            flag(p, "in_coverage");
            break;
        }
        case MessageType::VlpFix: {
            if (count(p, "led_id") > 255) schema("payload.led_id out of range");
            number(p, "x");
            number(p, "y");
            if (number(p, "sigma") <= 0.0) schema("payload.sigma must be positive");
            flag(p, "accepted");
            break;
        }
        case MessageType::Goal:
            number(p, "x");
            number(p, "y");
            if (p.contains("tolerance") && number(p, "tolerance") <= 0.0)
                schema("payload.tolerance must be positive");
            break;
        case MessageType::GoalStatus: {
            const std::string& state = text(p, "state");
            if (state != "active" && state != "reached" && state != "rejected")
                schema("payload.state must be active, reached or rejected");
            number(p, "x");
            number(p, "y");
            if (p.contains("reason")) text(p, "reason");
            break;
        }
        case MessageType::Metric:
            if (text(p, "name").empty()) schema("payload.name must not be empty");
            number(p, "value");
            break;
        case MessageType::Error:
            text(p, "code");
            text(p, "message");
            break;
    }
}

WireMessage from_document(const ojson& doc) {
    if (!doc.is_object()) schema("message must be a JSON object");
    const auto type_it = doc.find("type");
    if (type_it == doc.end() || !type_it->is_string()) schema("type must be a string");
    const auto type = message_type_from(type_it->get_ref<const std::string&>());
    if (!type) throw ProtocolError(ProtocolErrc::UnknownType, type_it->get<std::string>());

    WireMessage msg;
    msg.type = *type;
    const auto id = doc.find("robot_id");
    if (id == doc.end() || !id->is_string()) schema("robot_id must be a string");
    msg.robot_id = id->get<std::string>();
    const auto seq = doc.find("seq");
    if (seq == doc.end() || !seq->is_number_unsigned()) schema("seq must be an unsigned integer");
    msg.seq = seq->get<std::uint64_t>();
    const auto t = doc.find("t_ms");
    if (t == doc.end() || !t->is_number_unsigned()) schema("t_ms must be an unsigned integer");
    msg.t_ms = t->get<std::uint64_t>();
    const auto payload = doc.find("payload");
    if (payload == doc.end() || !payload->is_object()) schema("payload must be an object");
    msg.payload = *payload;
    validate_message(msg);
    return msg;
}

}  // namespace

const char* to_string(MessageType type) {
    for (const auto& [t, name] : kTypeNames)
        if (t == type) return name;
    return "UNKNOWN";
}

std::optional<MessageType> message_type_from(std::string_view name) {
    for (const auto& [t, n] : kTypeNames)
        if (name == n) return t;
    return std::nullopt;
}

const char* to_string(ProtocolErrc code) {
    switch (code) {
        case ProtocolErrc::TruncatedFrame: return "TruncatedFrame";
        case ProtocolErrc::MalformedJson: return "MalformedJson";
        case ProtocolErrc::UnknownType: return "UnknownType";
        case ProtocolErrc::SchemaViolation: return "SchemaViolation";
        case ProtocolErrc::PayloadTooLarge: return "PayloadTooLarge";
    }
    return "Unknown";
}

void validate_message(const WireMessage& msg) {
    if (msg.robot_id.empty()) schema("robot_id must not be empty");
    if (!msg.payload.is_object()) schema("payload must be an object");
    validate_payload(msg.type, msg.payload);
}

std::string to_json_text(const WireMessage& msg) {
    validate_message(msg);
    ojson doc = ojson::object();
    doc["type"] = to_string(msg.type);
    doc["robot_id"] = msg.robot_id;
    doc["seq"] = msg.seq;
    doc["t_ms"] = msg.t_ms;
    doc["payload"] = msg.payload;
    try {
        return doc.dump();
    } catch (const ojson::type_error& e) {
        schema(std::string("not encodable as UTF-8 JSON: ") + e.what());
    }
}

WireMessage from_json_text(std::string_view text) {
    ojson doc;
    try {
        doc = ojson::parse(text.begin(), text.end());
    } catch (const ojson::exception& e) {  // out-of-range numbers are not parse_error
        throw ProtocolError(ProtocolErrc::MalformedJson, e.what());
    }
    return from_document(doc);
}

std::vector<std::uint8_t> encode_message(const WireMessage& msg) {
    const std::string body = to_json_text(msg);
    if (body.size() > kMaxFrameBytes)
        throw ProtocolError(ProtocolErrc::PayloadTooLarge, std::to_string(body.size()) + " bytes");
    const auto n = static_cast<std::uint32_t>(body.size());
    std::vector<std::uint8_t> out;
    out.reserve(kLengthPrefixBytes + body.size());
    out.push_back(static_cast<std::uint8_t>(n >> 24));
    out.push_back(static_cast<std::uint8_t>(n >> 16));
    out.push_back(static_cast<std::uint8_t>(n >> 8));
    out.push_back(static_cast<std::uint8_t>(n));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

WireMessage decode_message(std::span<const std::uint8_t> bytes, std::size_t* consumed) {
    if (consumed) *consumed = 0;
    if (bytes.size() < kLengthPrefixBytes)
        throw ProtocolError(ProtocolErrc::TruncatedFrame, "length prefix incomplete");
    const std::uint32_t n = (std::uint32_t{bytes[0]} << 24) | (std::uint32_t{bytes[1]} << 16) |
                            (std::uint32_t{bytes[2]} << 8) | std::uint32_t{bytes[3]};
    if (n > kMaxFrameBytes)
        throw ProtocolError(ProtocolErrc::PayloadTooLarge, std::to_string(n) + " bytes announced");
    if (bytes.size() - kLengthPrefixBytes < n)
        throw ProtocolError(ProtocolErrc::TruncatedFrame, "need " + std::to_string(n) + " bytes, have " +
                                                              std::to_string(bytes.size() - kLengthPrefixBytes));
    if (consumed) *consumed = kLengthPrefixBytes + n;
    const auto* body = reinterpret_cast<const char*>(bytes.data() + kLengthPrefixBytes);
    return from_json_text(std::string_view(body, n));
}

void FrameBuffer::append(std::span<const std::uint8_t> bytes) {
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<WireMessage> FrameBuffer::next() {
    std::size_t consumed = 0;
    try {
        WireMessage msg = decode_message(buffer_, &consumed);
        buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(consumed));
        return msg;
    } catch (const ProtocolError& e) {
        if (e.code() == ProtocolErrc::TruncatedFrame) return std::nullopt;
        buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(consumed));
        throw;
    }
}

}  // namespace vlp
