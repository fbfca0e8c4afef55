#include "vlpfleet/vlp_decoder.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

#include "vlpfleet/beacon_codec.hpp"

namespace vlp {

const char* to_string(DecodeDiag diag) {
    switch (diag) {
        case DecodeDiag::Ok: return "ok";
        case DecodeDiag::NoRoi: return "no_roi";
        case DecodeDiag::DegenerateRoi: return "degenerate_roi";
        case DecodeDiag::UnstableChipEstimate: return "unstable_chip_estimate";
        case DecodeDiag::NoPreamble: return "no_preamble";
        case DecodeDiag::ManchesterViolation: return "manchester_violation";
        case DecodeDiag::ParityMismatch: return "parity_mismatch";
        case DecodeDiag::CopiesDisagree: return "copies_disagree";
        case DecodeDiag::InconsistentStream: return "inconsistent_stream";
    }
    return "unknown";
}

namespace {

struct Component {
    std::vector<int> pixels;  // linear indices
    int col_min{0}, col_max{0}, row_min{0}, row_max{0};
};

// Bright pixels plus vertical bridging of dark stripes within each column.
std::vector<std::uint8_t> stripe_closed_mask(const FrameImage& frame, int threshold, int max_gap) {
    const int w = frame.width;
    const int h = frame.height;
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(w) * h, 0);
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = frame.pixels[i] >= threshold;
    for (int c = 0; c < w; ++c) {
        int last_bright = -1;
        for (int r = 0; r < h; ++r) {
            const auto idx = static_cast<std::size_t>(r) * w + c;
            if (!mask[idx]) continue;
            if (last_bright >= 0 && r - last_bright - 1 <= max_gap) {
                for (int k = last_bright + 1; k < r; ++k) mask[static_cast<std::size_t>(k) * w + c] = 2;
            }
            last_bright = r;
        }
    }
    return mask;
}

Component largest_component(const std::vector<std::uint8_t>& mask, int w, int h) {
    std::vector<std::uint8_t> seen(mask.size(), 0);
    Component best;
    std::vector<int> stack;
    for (int start = 0; start < w * h; ++start) {
        if (!mask[static_cast<std::size_t>(start)] || seen[static_cast<std::size_t>(start)]) continue;
        Component comp;
        comp.col_min = comp.col_max = start % w;
        comp.row_min = comp.row_max = start / w;
        stack.assign(1, start);
        seen[static_cast<std::size_t>(start)] = 1;
        while (!stack.empty()) {
            const int idx = stack.back();
            stack.pop_back();
            comp.pixels.push_back(idx);
            const int r = idx / w;
            const int c = idx % w;
            comp.col_min = std::min(comp.col_min, c);
            comp.col_max = std::max(comp.col_max, c);
            comp.row_min = std::min(comp.row_min, r);
            comp.row_max = std::max(comp.row_max, r);
            const int neighbours[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
            for (const auto& n : neighbours) {
                if (n[0] < 0 || n[0] >= h || n[1] < 0 || n[1] >= w) continue;
                const int j = n[0] * w + n[1];
                if (mask[static_cast<std::size_t>(j)] && !seen[static_cast<std::size_t>(j)]) {
                    seen[static_cast<std::size_t>(j)] = 1;
                    stack.push_back(j);
                }
            }
        }
        if (comp.pixels.size() > best.pixels.size()) best = std::move(comp);
    }
    return best;
}

struct CircleFit {
    double u, v, radius;
};

// Algebraic least-squares circle through the left/right edges of lit rows. The
// stripes bias an area centroid vertically; chord edges of lit rows do not.
std::optional<CircleFit> fit_lit_edges(const FrameImage& frame, const Component& comp,
                                       const std::vector<std::uint8_t>& mask) {
    const int w = frame.width;
    const double u0 = 0.5 * (comp.col_min + comp.col_max);
    const double v0 = 0.5 * (comp.row_min + comp.row_max);
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    int points = 0;
    std::map<int, std::pair<int, int>> row_span;  // row -> [min col, max col] of the component
    for (int idx : comp.pixels) {
        const int r = idx / w;
        const int c = idx % w;
        auto [it, inserted] = row_span.try_emplace(r, c, c);
        if (!inserted) {
            it->second.first = std::min(it->second.first, c);
            it->second.second = std::max(it->second.second, c);
        }
    }
    for (const auto& [r, span] : row_span) {
        int lit = 0;
        int left = -1;
        int right = -1;
        for (int c = span.first; c <= span.second; ++c) {
            if (mask[static_cast<std::size_t>(r) * w + c] == 1) {
                ++lit;
                if (left < 0) left = c;
                right = c;
            }
        }
        const int span_len = span.second - span.first + 1;
        if (left < 0 || 2 * lit < span_len) continue;  // dark stripe row
        for (const double x : {left - 0.5, right + 0.5}) {
            const double px = x - u0;
            const double py = r - v0;
            const Eigen::Vector3d a(px, py, 1.0);
            ata += a * a.transpose();
            atb += a * -(px * px + py * py);
            ++points;
        }
    }
    if (points < 6) return std::nullopt;
    const Eigen::Vector3d sol = ata.ldlt().solve(atb);
    const double cu = -sol(0) / 2.0;
    const double cv = -sol(1) / 2.0;
    const double r2 = cu * cu + cv * cv - sol(2);
    if (!std::isfinite(r2) || r2 <= 0.0) return std::nullopt;
    return CircleFit{cu + u0, cv + v0, std::sqrt(r2)};
}

struct Run {
    std::uint8_t value;
    int length;
};

std::vector<Run> run_lengths(std::span<const std::uint8_t> bits) {
    std::vector<Run> runs;
    for (auto b : bits) {
        if (!runs.empty() && runs.back().value == b)
            ++runs.back().length;
        else
            runs.push_back({b, 1});
    }
    return runs;
}

// Absorbs runs shorter than half a chip into their neighbours, shortest first.
std::vector<Run> despeckle(std::vector<Run> runs, int rows_per_chip, int* absorbed = nullptr) {
    const double limit = rows_per_chip / 2.0;
    if (absorbed) *absorbed = 0;
    while (runs.size() > 1) {
        std::size_t victim = runs.size();
        for (std::size_t i = 0; i < runs.size(); ++i) {
            if (runs[i].length < limit && (victim == runs.size() || runs[i].length < runs[victim].length))
                victim = i;
        }
        if (victim == runs.size()) break;
        if (absorbed) ++*absorbed;
        if (victim == 0) {
            runs[1].length += runs[0].length;
            runs.erase(runs.begin());
        } else if (victim + 1 == runs.size()) {
            runs[victim - 1].length += runs[victim].length;
            runs.pop_back();
        } else {
            runs[victim - 1].length += runs[victim].length + runs[victim + 1].length;
            runs.erase(runs.begin() + static_cast<std::ptrdiff_t>(victim),
                       runs.begin() + static_cast<std::ptrdiff_t>(victim) + 2);
        }
    }
    return runs;
}

int chips_in_run(int length, int rows_per_chip) {
    return static_cast<int>(std::lround(static_cast<double>(length) / rows_per_chip));
}

// Fraction of interior runs that are a whole number (1..4) of chips wide. Runs the
// despeckle step had to absorb count against the candidate width.
double chip_fit(const std::vector<Run>& raw, int rows_per_chip, double tolerance) {
    int absorbed = 0;
    const auto runs = despeckle(raw, rows_per_chip, &absorbed);
    const std::size_t first = runs.size() > 2 ? 1 : 0;
    const std::size_t last = runs.size() > 2 ? runs.size() - 1 : runs.size();
    int good = 0;
    for (std::size_t i = first; i < last; ++i) {
        const double k = std::round(static_cast<double>(runs[i].length) / rows_per_chip);
        if (k >= 1.0 && k <= 4.0 && std::abs(runs[i].length - k * rows_per_chip) <= tolerance * rows_per_chip)
            ++good;
    }
    const auto total = static_cast<double>(last - first) + absorbed;
    return total > 0.0 ? good / total : 0.0;
}

ChipEstimate expand(const std::vector<Run>& runs, int rows_per_chip) {
    ChipEstimate est;
    est.rows_per_chip = rows_per_chip;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const int n = chips_in_run(runs[i].length, rows_per_chip);
        if (n <= 0) continue;
        if (i == 0) est.leading_chips = static_cast<std::size_t>(n);
        if (i + 1 == runs.size() && runs.size() > 1) est.trailing_chips = static_cast<std::size_t>(n);
        est.chips.insert(est.chips.end(), static_cast<std::size_t>(n), runs[i].value);
    }
    return est;
}

bool related(int a, int b) { return a % b == 0 || b % a == 0; }

struct FrameCopies {
    int id{-1};
    double quality{0.0};
    DecodeDiag diag{DecodeDiag::NoPreamble};
};

FrameCopies decode_copies(const ChipEstimate& est) {
    FrameCopies out;
    const std::size_t lead = est.leading_chips;
    const std::size_t trail = est.trailing_chips;
    if (est.chips.size() < lead + trail + kChipsPerFrame) return out;
    const std::span<const std::uint8_t> body(est.chips.data() + lead, est.chips.size() - lead - trail);

    // Each consecutive frame-length window is one rotated copy of the frame.
    const std::size_t copies = body.size() / kChipsPerFrame;
    int agreed = -1;
    int successes = 0;
    DecodeDiag failure = DecodeDiag::NoPreamble;
    for (std::size_t k = 0; k < copies; ++k) {
        try {
            const int id = decode_chips(body.subspan(k * kChipsPerFrame, kChipsPerFrame));
            if (agreed >= 0 && id != agreed) {
                out.diag = DecodeDiag::CopiesDisagree;
                return out;
            }
            agreed = id;
            ++successes;
        } catch (const CodecError& e) {
            failure = e.code() == CodecErrc::ManchesterViolation ? DecodeDiag::ManchesterViolation
                      : e.code() == CodecErrc::ParityMismatch    ? DecodeDiag::ParityMismatch
                                                                 : DecodeDiag::NoPreamble;
        }
    }
    if (successes == 0) {
        out.diag = failure;
        return out;
    }
    // Every interior chip, partial copies included, must match the re-encoded
    // frame at a single alignment. A miscounted stripe shifts the alignment.
    const ChipFrame expected = encode_id(agreed);
    bool consistent = false;
    for (std::size_t phase = 0; phase < kChipsPerFrame && !consistent; ++phase) {
        consistent = true;
        for (std::size_t i = 0; i < body.size(); ++i) {
            if (body[i] != expected.chips[(i + phase) % kChipsPerFrame]) {
                consistent = false;
                break;
            }
        }
    }
    if (!consistent) {
        out.diag = DecodeDiag::InconsistentStream;
        return out;
    }
    out.id = agreed;
    out.quality = static_cast<double>(successes) / static_cast<double>(copies);
    out.diag = DecodeDiag::Ok;
    return out;
}

}  // namespace

std::optional<RoiCircle> detect_roi(const FrameImage& frame, const DecoderParams& params) {
    if (frame.width <= 0 || frame.height <= 0) return std::nullopt;
    const int threshold = params.background + params.threshold_offset;
    const auto mask = stripe_closed_mask(frame, threshold, params.max_stripe_gap_rows);
    const Component comp = largest_component(mask, frame.width, frame.height);
    if (comp.pixels.empty()) return std::nullopt;

    const int box_w = comp.col_max - comp.col_min + 1;
    const int box_h = comp.row_max - comp.row_min + 1;
    const double aspect = static_cast<double>(box_w) / box_h;
    if (aspect < params.aspect_min || aspect > params.aspect_max) return std::nullopt;
    if (static_cast<double>(comp.pixels.size()) < params.min_fill_ratio * box_w * box_h)
        return std::nullopt;
    if (box_h < params.min_roi_rows) return std::nullopt;

    RoiCircle roi;
    roi.radius = 0.25 * (box_w + box_h);
    roi.row_min = comp.row_min;
    roi.row_max = comp.row_max;
    if (const auto fit = fit_lit_edges(frame, comp, mask)) {
        // Lit-row edges of a real disk agree with its bounding box.
        if (std::abs(fit->radius - roi.radius) > params.max_radius_mismatch * roi.radius)
            return std::nullopt;
        roi.center_u = fit->u;
        roi.center_v = fit->v;
    } else {
        double sw = 0.0, su = 0.0, sv = 0.0;
        for (int idx : comp.pixels) {
            const double wgt = frame.pixels[static_cast<std::size_t>(idx)];
            sw += wgt;
            su += wgt * (idx % frame.width);
            sv += wgt * (idx / frame.width);
        }
        roi.center_u = su / sw;
        roi.center_v = sv / sw;
    }
    if (roi.center_u < 0.0 || roi.center_u >= frame.width || roi.center_v < 0.0 ||
        roi.center_v >= frame.height)
        return std::nullopt;
    return roi;
}

RowBits binarize_rows(const FrameImage& frame, const RoiCircle& roi, const DecoderParams& params) {
    RowBits out;
    const int lo = std::max(roi.row_min, 0);
    const int hi = std::min(roi.row_max, frame.height - 1);
    for (int r = lo; r <= hi; ++r) {
        const double dy = r - roi.center_v;
        const double half2 = roi.radius * roi.radius - dy * dy;
        if (half2 < 0.0) continue;
        const double half = std::sqrt(half2);
        const int c_lo = std::max(0, static_cast<int>(std::ceil(roi.center_u - half)));
        const int c_hi = std::min(frame.width - 1, static_cast<int>(std::floor(roi.center_u + half)));
        if (c_hi - c_lo + 1 < params.min_chord_px) continue;
        double sum = 0.0;
        for (int c = c_lo; c <= c_hi; ++c) sum += frame.at(c, r);
        out.rows.push_back(r);
        out.means.push_back(sum / (c_hi - c_lo + 1));
    }
    if (static_cast<int>(out.rows.size()) < params.min_usable_rows)
        throw DecodeError(DecodeDiag::DegenerateRoi);

    const auto [mn, mx] = std::minmax_element(out.means.begin(), out.means.end());
    const double threshold = 0.5 * (*mn + *mx);
    // Edge rows that clip background would fake contrast on a flat blob, so use the inner spread.
    std::vector<double> sorted = out.means;
    std::sort(sorted.begin(), sorted.end());
    const double p10 = sorted[sorted.size() / 10];
    const double p90 = sorted[sorted.size() - 1 - sorted.size() / 10];
    const bool flat = p90 - p10 < params.min_row_contrast;
    out.bits.reserve(out.means.size());
    for (double m : out.means) out.bits.push_back(!flat && m >= threshold ? 1 : 0);
    return out;
}

ChipEstimate chips_from_rows(std::span<const std::uint8_t> row_bits, std::optional<int> rows_per_chip,
                             const DecoderParams& params) {
    const auto raw = run_lengths(row_bits);
    if (raw.empty()) throw DecodeError(DecodeDiag::UnstableChipEstimate);
    if (rows_per_chip) {
        if (*rows_per_chip <= 0) throw std::invalid_argument("rows_per_chip must be positive");
        return expand(despeckle(raw, *rows_per_chip), *rows_per_chip);
    }

    int longest = 0;
    for (const auto& run : raw) longest = std::max(longest, run.length);
    std::vector<double> fit(static_cast<std::size_t>(longest) + 1, 0.0);
    double best = 0.0;
    for (int p = 1; p <= longest; ++p) {
        fit[static_cast<std::size_t>(p)] = chip_fit(raw, p, params.chip_fit_tolerance);
        best = std::max(best, fit[static_cast<std::size_t>(p)]);
    }
    if (best < 0.5) throw DecodeError(DecodeDiag::UnstableChipEstimate);

    // Widest chip that explains the runs best; narrower related widths stay as fallbacks.
    int chosen = 0;
    std::vector<int> tied;
    for (int p = longest; p >= 1; --p) {
        if (fit[static_cast<std::size_t>(p)] < best - 1e-12) continue;
        if (chosen == 0)
            chosen = p;
        else if (related(p, chosen))
            tied.push_back(p);
    }
    for (int q = 1; q <= longest; ++q) {
        if (related(q, chosen)) continue;
        if (fit[static_cast<std::size_t>(q)] >= params.ambiguity_ratio * best)
            throw DecodeError(DecodeDiag::UnstableChipEstimate);
    }
    ChipEstimate est = expand(despeckle(raw, chosen), chosen);
    est.alternatives = std::move(tied);
    return est;
}

DecodeResult decode_frame(const FrameImage& frame, const DecoderParams& params) {
    DecodeResult result;
    const auto roi = detect_roi(frame, params);
    if (!roi) {
        result.diagnostic = DecodeDiag::NoRoi;
        return result;
    }
    try {
        const RowBits rows = binarize_rows(frame, *roi, params);
        ChipEstimate est = chips_from_rows(rows.bits, std::nullopt, params);
        std::vector<int> widths{est.rows_per_chip};
        widths.insert(widths.end(), est.alternatives.begin(), est.alternatives.end());
        DecodeDiag first_failure = DecodeDiag::NoPreamble;
        for (std::size_t k = 0; k < widths.size(); ++k) {
            const ChipEstimate attempt = k == 0 ? est : chips_from_rows(rows.bits, widths[k], params);
            const FrameCopies copies = decode_copies(attempt);
            if (copies.diag == DecodeDiag::Ok) {
                result.detection = VlpDetection{copies.id, *roi, copies.quality};
                result.diagnostic = DecodeDiag::Ok;
                return result;
            }
            if (k == 0) first_failure = copies.diag;
        }
        result.diagnostic = first_failure;
    } catch (const DecodeError& e) {
        result.diagnostic = e.diag();
    }
    return result;
}

}  // namespace vlp
