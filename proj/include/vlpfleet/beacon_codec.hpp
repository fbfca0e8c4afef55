#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vlpfleet/geometry.hpp"

namespace vlp {

/// A ceiling LED transmitting its 8-bit ID by on-off keying.
struct LedBeacon {
    int id{1};
    Vec2 position{4.16, 2.40};
    double height{2.20};
    double diameter{0.18};
    double chip_period{120e-6};

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

inline constexpr std::size_t kChipsPerFrame = 24;
inline constexpr std::array<std::uint8_t, 6> kPreamble{1, 1, 1, 0, 0, 0};

/// One transmitted frame: preamble, Manchester ID (MSB first), Manchester parity bit.
struct ChipFrame {
    std::array<std::uint8_t, kChipsPerFrame> chips{};

    friend bool operator==(const ChipFrame&, const ChipFrame&) = default;
};

enum class CodecErrc { InvalidId, NoPreamble, ManchesterViolation, ParityMismatch, TooShort };

const char* to_string(CodecErrc code);

class CodecError : public std::runtime_error {
public:
    explicit CodecError(CodecErrc code)
        : std::runtime_error(to_string(code)), code_(code) {}

    CodecErrc code() const noexcept { return code_; }

private:
    CodecErrc code_;
};

ChipFrame encode_id(int id);

/// Decodes a chip stream that carries at least one frame. The stream may start
/// anywhere inside a frame. A complete frame following a preamble is preferred;
/// a stream whose length is a whole number of frames is also searched cyclically.
int decode_chips(std::span<const std::uint8_t> chips);

/// Decodes exactly one frame's worth of chips starting at `offset` (no search).
int decode_frame_at(std::span<const std::uint8_t> chips, std::size_t offset);

/// Positions of every preamble in `chips` that is followed by a complete frame.
std::vector<std::size_t> find_frame_starts(std::span<const std::uint8_t> chips);

/// LED output at time t: the frame repeats forever starting at t = 0.
std::uint8_t level_at(const ChipFrame& frame, double t, double chip_period);

}  // namespace vlp
