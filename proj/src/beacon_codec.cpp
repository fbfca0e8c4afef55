#include "vlpfleet/beacon_codec.hpp"

#include <bit>
#include <cmath>

namespace vlp {

namespace {

constexpr std::size_t kPayloadStart = kPreamble.size();

bool preamble_at(std::span<const std::uint8_t> chips, std::size_t offset, bool cyclic) {
    for (std::size_t k = 0; k < kPreamble.size(); ++k) {
        std::size_t i = offset + k;
        if (cyclic) i %= chips.size();
        if (chips[i] != kPreamble[k]) return false;
    }
    return true;
}

int decode_payload(std::span<const std::uint8_t> chips, std::size_t offset, bool cyclic) {
    auto chip = [&](std::size_t k) {
        std::size_t i = offset + k;
        if (cyclic) i %= chips.size();
        return chips[i];
    };
    if (!preamble_at(chips, offset, cyclic)) throw CodecError(CodecErrc::NoPreamble);
    int bits[9];
    for (int b = 0; b < 9; ++b) {
        const auto first = chip(kPayloadStart + 2 * b);
        const auto second = chip(kPayloadStart + 2 * b + 1);
        if (first == second) throw CodecError(CodecErrc::ManchesterViolation);
        bits[b] = first;  // 10 -> 1, 01 -> 0
    }
    int id = 0;
    for (int b = 0; b < 8; ++b) id = (id << 1) | bits[b];
    if ((std::popcount(static_cast<unsigned>(id)) & 1) != bits[8])
        throw CodecError(CodecErrc::ParityMismatch);
    return id;
}

}  // namespace

const char* to_string(CodecErrc code) {
    switch (code) {
        case CodecErrc::InvalidId: return "InvalidId";
        case CodecErrc::NoPreamble: return "NoPreamble";
        case CodecErrc::ManchesterViolation: return "ManchesterViolation";
        case CodecErrc::ParityMismatch: return "ParityMismatch";
        case CodecErrc::TooShort: return "TooShort";
    }
    return "Unknown";
}

void LedBeacon::validate() const {
    if (id < 0 || id > 255) throw std::invalid_argument("beacon id must be in 0..255");
    if (!(height > 0.0)) throw std::invalid_argument("beacon height must be positive");
    if (!(diameter > 0.0)) throw std::invalid_argument("beacon diameter must be positive");
    if (!(chip_period > 0.0)) throw std::invalid_argument("beacon chip_period must be positive");
}

ChipFrame encode_id(int id) {
    if (id < 0 || id > 255) throw CodecError(CodecErrc::InvalidId);
    ChipFrame frame;
    std::size_t k = 0;
    for (auto c : kPreamble) frame.chips[k++] = c;
    auto manchester = [&](int bit) {
        frame.chips[k++] = bit ? 1 : 0;
        frame.chips[k++] = bit ? 0 : 1;
    };
    for (int b = 7; b >= 0; --b) manchester((id >> b) & 1);
    manchester(std::popcount(static_cast<unsigned>(id)) & 1);
    return frame;
}

std::vector<std::size_t> find_frame_starts(std::span<const std::uint8_t> chips) {
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + kChipsPerFrame <= chips.size(); ++s)
        if (preamble_at(chips, s, false)) starts.push_back(s);
    return starts;
}

int decode_frame_at(std::span<const std::uint8_t> chips, std::size_t offset) {
    if (offset + kChipsPerFrame > chips.size()) throw CodecError(CodecErrc::TooShort);
    return decode_payload(chips, offset, false);
}

int decode_chips(std::span<const std::uint8_t> chips) {
    if (chips.size() < kChipsPerFrame) throw CodecError(CodecErrc::TooShort);
    const auto starts = find_frame_starts(chips);
    if (!starts.empty()) return decode_payload(chips, starts.front(), false);
    if (chips.size() % kChipsPerFrame == 0) {
        for (std::size_t s = 0; s < chips.size(); ++s)
            if (preamble_at(chips, s, true)) return decode_payload(chips, s, true);
    }
    throw CodecError(CodecErrc::NoPreamble);
}

std::uint8_t level_at(const ChipFrame& frame, double t, double chip_period) {
    const auto index = static_cast<long long>(std::floor(t / chip_period));
    const auto n = static_cast<long long>(kChipsPerFrame);
    return frame.chips[static_cast<std::size_t>(((index % n) + n) % n)];
}

}  // namespace vlp
