#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vlp {

enum class MessageType { Hello, MapReq, Map, Pose, VlpFix, Goal, GoalStatus, Metric, Error };

const char* to_string(MessageType type);
std::optional<MessageType> message_type_from(std::string_view name);

struct WireMessage {
    MessageType type{MessageType::Hello};
    std::string robot_id;
    std::uint64_t seq{0};
    std::uint64_t t_ms{0};
    nlohmann::ordered_json payload = nlohmann::ordered_json::object();

    friend bool operator==(const WireMessage&, const WireMessage&) = default;
};

enum class ProtocolErrc { TruncatedFrame, MalformedJson, UnknownType, SchemaViolation, PayloadTooLarge };

const char* to_string(ProtocolErrc code);

class ProtocolError : public std::runtime_error {
public:
    ProtocolError(ProtocolErrc code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}
    ProtocolErrc code() const noexcept { return code_; }

private:
    ProtocolErrc code_;
};

inline constexpr std::size_t kLengthPrefixBytes = 4;
inline constexpr std::size_t kMaxFrameBytes = 1u << 20;

/// Throws SchemaViolation when the payload does not fit the type's schema.
void validate_message(const WireMessage& msg);

/// JSON text with keys in the fixed order type, robot_id, seq, t_ms, payload.
std::string to_json_text(const WireMessage& msg);
/// Parses and validates one JSON message (the WebSocket form, no prefix).
WireMessage from_json_text(std::string_view text);

/// 4-byte big-endian length prefix + JSON. Throws PayloadTooLarge beyond 1 MiB.
std::vector<std::uint8_t> encode_message(const WireMessage& msg);

/// Decodes the first frame of `bytes`. On success `consumed` is the frame size.
/// TruncatedFrame means more bytes are needed; every other error consumed the whole
/// frame (when its prefix was readable) so the stream can continue.
WireMessage decode_message(std::span<const std::uint8_t> bytes, std::size_t* consumed = nullptr);

/// Reassembles frames from a byte stream.
class FrameBuffer {
public:
    void append(std::span<const std::uint8_t> bytes);
    /// Next complete message, nullopt when more bytes are needed. Typed errors are
    /// thrown after the offending frame has been discarded. PayloadTooLarge leaves
    /// the stream unsynchronised and the caller should drop the connection.
    std::optional<WireMessage> next();
    std::size_t buffered() const { return buffer_.size(); }

private:
    std::vector<std::uint8_t> buffer_;
};

}  // namespace vlp
