#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "vlpfleet/camera_synth.hpp"

namespace vlp {

struct RoiCircle {
    double center_u{0.0};
    double center_v{0.0};
    double radius{0.0};
    int row_min{0};
    int row_max{0};
};

struct VlpDetection {
    int led_id{0};
    RoiCircle roi;
    double quality{0.0};  // agreeing frame copies / attempted copies
};

/// Decoder thresholds. Defaults are calibrated against the synthesizer defaults.
struct DecoderParams {
    int background{10};
    int threshold_offset{40};
    double aspect_min{0.6};
    double aspect_max{1.67};
    double min_fill_ratio{0.5};
    int min_roi_rows{96};
    int min_usable_rows{48};
    int min_chord_px{3};
    // Dark stripes split the lit disk into bands; vertical gaps up to this many
    // rows are bridged before connected-component labelling.
    int max_stripe_gap_rows{16};
    double max_radius_mismatch{0.25};
    double min_row_contrast{40.0};
    double chip_fit_tolerance{0.15};  // of one chip width
    double ambiguity_ratio{0.9};
};

enum class DecodeDiag {
    Ok,
    NoRoi,
    DegenerateRoi,
    UnstableChipEstimate,
    NoPreamble,
    ManchesterViolation,
    ParityMismatch,
    CopiesDisagree,
    InconsistentStream,
};

const char* to_string(DecodeDiag diag);

class DecodeError : public std::runtime_error {
public:
    explicit DecodeError(DecodeDiag diag) : std::runtime_error(to_string(diag)), diag_(diag) {}
    DecodeDiag diag() const noexcept { return diag_; }

private:
    DecodeDiag diag_;
};

struct RowBits {
    std::vector<int> rows;
    std::vector<std::uint8_t> bits;
    std::vector<double> means;
};

struct ChipEstimate {
    std::vector<std::uint8_t> chips;
    int rows_per_chip{1};
    // Chips contributed by the first and last runs, which the ROI edges truncate.
    std::size_t leading_chips{0};
    std::size_t trailing_chips{0};
    // Other chip widths that explain the runs equally well (divisors or multiples).
    std::vector<int> alternatives;
};

struct DecodeResult {
    std::optional<VlpDetection> detection;
    DecodeDiag diagnostic{DecodeDiag::NoRoi};
};

std::optional<RoiCircle> detect_roi(const FrameImage& frame, const DecoderParams& params = {});

/// Throws DecodeError(DegenerateRoi) when fewer than min_usable_rows rows have a usable chord.
RowBits binarize_rows(const FrameImage& frame, const RoiCircle& roi,
                      const DecoderParams& params = {});

/// Run-length stripe widths to chips. With no hint the chip width is estimated.
/// Throws DecodeError(UnstableChipEstimate).
ChipEstimate chips_from_rows(std::span<const std::uint8_t> row_bits,
                             std::optional<int> rows_per_chip = std::nullopt,
                             const DecoderParams& params = {});

DecodeResult decode_frame(const FrameImage& frame, const DecoderParams& params = {});

}  // namespace vlp
