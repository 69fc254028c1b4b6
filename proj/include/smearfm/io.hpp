#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "smearfm/image.hpp"
#include "smearfm/robust.hpp"
#include "smearfm/smear.hpp"
#include "smearfm/synth.hpp"
#include "smearfm/types.hpp"

namespace smearfm {

// Full-precision decimal formatting (17 significant digits), locale-free.
std::string format_full(double v);

// All writers below go through a temp file + rename, so readers never see a
// partially written file.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

// F-matrix text block: a "FMAT" line followed by 9 row-major decimals.
std::string fmat_to_string(const FundamentalMatrix& f);
FundamentalMatrix fmat_from_stream(std::istream& in);
void write_fmat(const std::filesystem::path& path, const FundamentalMatrix& f);
// Also accepts any file that begins with an FMAT block (e.g. a report).
FundamentalMatrix read_fmat(const std::filesystem::path& path);

// SMEARFIELD <w> <h> header, then w*h "u v sigma" lines, row-major.
void write_smear_field(const std::filesystem::path& path, const SmearField& field);
SmearField read_smear_field(const std::filesystem::path& path);

// FLOW <w> <h> header, then w*h "u v" lines, row-major.
void write_flow_field(const std::filesystem::path& path, const FlowField& field);
FlowField read_flow_field(const std::filesystem::path& path);

// SCENE file: header, camera K/R/T blocks (start then end), FMAT block,
// then per-correspondence "x y u v sigma label" lines. Only the observed
// data is serialized; 3D points and noiseless truth stay in memory.
void write_scene(const std::filesystem::path& path, const SyntheticScene& scene);
SyntheticScene read_scene(const std::filesystem::path& path);

// Estimation report: FMAT block, INLIERS <count>/<total>, MEDIAN_SERR <v>,
// then per-smear "index x y u v serr dir inlier" lines.
void write_report(const std::filesystem::path& path, const EstimationReport& report,
                  const Selection& selection);

struct ReportRow {
  std::size_t index = 0;
  ImagePoint point;
  SmearVector smear;
  double serr = 0.0;
  TimeDirection direction = TimeDirection::kStartToEnd;
  bool inlier = false;
};

struct ReportFile {
  FundamentalMatrix f;
  std::size_t inlier_count = 0;
  std::size_t total = 0;
  double median_serr = 0.0;
  std::vector<ReportRow> rows;
};

ReportFile read_report(const std::filesystem::path& path);

// Point list: one "x y" pair per line.
std::vector<ImagePoint> read_points(const std::filesystem::path& path);

// Netpbm images. Grayscale images are written as 16-bit binary P5,
// segmentation masks as 8-bit P5 (global=0, local=255, unknown=128), color
// renders as binary P6.
void write_pgm16(const std::filesystem::path& path, const ImageGray& img);
void write_mask_pgm(const std::filesystem::path& path,
                    const std::vector<std::uint8_t>& mask, int width, int height);
void write_ppm(const std::filesystem::path& path, const ImageRgb& img);
ImageRgb read_netpbm(const std::filesystem::path& path);

}  // namespace smearfm
