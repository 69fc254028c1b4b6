#include "smearfm/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "smearfm/errors.hpp"

namespace smearfm {

namespace fs = std::filesystem;

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

namespace {

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  return in;
}

double read_double(std::istream& in, const char* what) {
  double v = 0.0;
  if (!(in >> v)) throw IoError(std::string("expected number: ") + what);
  return v;
}

std::string expect_token(std::istream& in, const std::string& expected) {
  std::string tok;
  if (!(in >> tok) || tok != expected) {
    throw IoError("expected token '" + expected + "'");
  }
  return tok;
}

void append_mat3(std::string& out, const Mat3& m) {
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      out += format_full(m(i, j));
      out += (j == 2) ? '\n' : ' ';
    }
  }
}

Mat3 read_mat3(std::istream& in, const char* what) {
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = read_double(in, what);
  return m;
}

const char* label_token(PointLabel label) {
  switch (label) {
    case PointLabel::kGlobal: return "global";
    case PointLabel::kLocalMotion: return "local";
    case PointLabel::kNoise: return "noise";
  }
  return "global";
}

PointLabel label_from_token(const std::string& tok) {
  if (tok == "global") return PointLabel::kGlobal;
  if (tok == "local") return PointLabel::kLocalMotion;
  if (tok == "noise") return PointLabel::kNoise;
  throw IoError("unknown correspondence label: " + tok);
}

}  // namespace

std::string fmat_to_string(const FundamentalMatrix& f) {
  std::string out = "FMAT\n";
  append_mat3(out, f.m);
  return out;
}

FundamentalMatrix fmat_from_stream(std::istream& in) {
  expect_token(in, "FMAT");
  FundamentalMatrix f;
  f.m = read_mat3(in, "FMAT entry");
  return f;
}

void write_fmat(const fs::path& path, const FundamentalMatrix& f) {
  write_text_atomic(path, fmat_to_string(f));
}

FundamentalMatrix read_fmat(const fs::path& path) {
  auto in = open_input(path);
  return fmat_from_stream(in);
}

void write_smear_field(const fs::path& path, const SmearField& field) {
  std::string out = "SMEARFIELD " + std::to_string(field.width) + " " +
                    std::to_string(field.height) + "\n";
  for (const auto& s : field.samples) {
    out += format_full(s.u);
    out += ' ';
    out += format_full(s.v);
    out += ' ';
    out += format_full(s.sigma);
    out += '\n';
  }
  write_text_atomic(path, out);
}

SmearField read_smear_field(const fs::path& path) {
  auto in = open_input(path);
  expect_token(in, "SMEARFIELD");
  SmearField field;
  field.width = static_cast<int>(read_double(in, "width"));
  field.height = static_cast<int>(read_double(in, "height"));
  if (field.width <= 0 || field.height <= 0) {
    throw IoError("SMEARFIELD: bad dimensions in " + path.string());
  }
  field.samples.resize(static_cast<std::size_t>(field.width) * field.height);
  for (auto& s : field.samples) {
    s.u = read_double(in, "u");
    s.v = read_double(in, "v");
    s.sigma = read_double(in, "sigma");
    if (!(s.sigma > 0.0)) throw IoError("SMEARFIELD: sigma must be > 0");
  }
  return field;
}

void write_flow_field(const fs::path& path, const FlowField& field) {
  std::string out = "FLOW " + std::to_string(field.width) + " " +
                    std::to_string(field.height) + "\n";
  for (const auto& f : field.flow) {
    out += format_full(f.u);
    out += ' ';
    out += format_full(f.v);
    out += '\n';
  }
  write_text_atomic(path, out);
}

FlowField read_flow_field(const fs::path& path) {
  auto in = open_input(path);
  expect_token(in, "FLOW");
  FlowField field;
  field.width = static_cast<int>(read_double(in, "width"));
  field.height = static_cast<int>(read_double(in, "height"));
  if (field.width <= 0 || field.height <= 0) {
    throw IoError("FLOW: bad dimensions in " + path.string());
  }
  field.flow.resize(static_cast<std::size_t>(field.width) * field.height);
  for (auto& f : field.flow) {
    f.u = read_double(in, "u");
    f.v = read_double(in, "v");
  }
  return field;
}

void write_scene(const fs::path& path, const SyntheticScene& scene) {
  std::string out = "SCENE " + std::to_string(scene.width) + " " +
                    std::to_string(scene.height) + " " +
                    std::to_string(scene.correspondences.size()) + "\n";
  for (const CameraPose* cam : {&scene.cam_start, &scene.cam_end}) {
    out += "K\n";
    append_mat3(out, cam->k);
    out += "R\n";
    append_mat3(out, cam->r);
    out += "T\n";
    for (int i = 0; i < 3; ++i) {
      out += format_full(cam->t[i]);
      out += (i == 2) ? '\n' : ' ';
    }
  }
  out += fmat_to_string(scene.f_gt);
  for (std::size_t i = 0; i < scene.correspondences.size(); ++i) {
    const auto& c = scene.correspondences[i];
    out += format_full(c.midpoint.x);
    out += ' ';
    out += format_full(c.midpoint.y);
    out += ' ';
    out += format_full(c.half_smear.u);
    out += ' ';
    out += format_full(c.half_smear.v);
    out += ' ';
    out += format_full(scene.sigmas[i]);
    out += ' ';
    out += label_token(scene.labels[i]);
    out += '\n';
  }
  write_text_atomic(path, out);
}

SyntheticScene read_scene(const fs::path& path) {
  auto in = open_input(path);
  expect_token(in, "SCENE");
  SyntheticScene scene;
  scene.width = static_cast<int>(read_double(in, "width"));
  scene.height = static_cast<int>(read_double(in, "height"));
  const auto count = static_cast<std::size_t>(read_double(in, "count"));
  for (CameraPose* cam : {&scene.cam_start, &scene.cam_end}) {
    expect_token(in, "K");
    cam->k = read_mat3(in, "K entry");
    expect_token(in, "R");
    cam->r = read_mat3(in, "R entry");
    expect_token(in, "T");
    for (int i = 0; i < 3; ++i) cam->t[i] = read_double(in, "T entry");
  }
  scene.f_gt = fmat_from_stream(in);
  scene.correspondences.resize(count);
  scene.sigmas.resize(count);
  scene.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto& c = scene.correspondences[i];
    c.midpoint.x = read_double(in, "x");
    c.midpoint.y = read_double(in, "y");
    c.half_smear.u = read_double(in, "u");
    c.half_smear.v = read_double(in, "v");
    scene.sigmas[i] = read_double(in, "sigma");
    std::string tok;
    if (!(in >> tok)) throw IoError("scene: missing label");
    scene.labels[i] = label_from_token(tok);
  }
  return scene;
}

void write_report(const fs::path& path, const EstimationReport& report,
                  const Selection& selection) {
  const std::size_t n = report.per_smear_error.size();
  std::size_t inliers = 0;
  for (auto m : report.inlier_mask) inliers += m ? 1 : 0;
  std::vector<double> sorted = report.per_smear_error;
  std::sort(sorted.begin(), sorted.end());
  const double median = n == 0 ? 0.0
                        : (n % 2 == 1 ? sorted[n / 2]
                                      : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]));

  std::string out = fmat_to_string(report.f);
  out += "INLIERS " + std::to_string(inliers) + "/" + std::to_string(n) + "\n";
  out += "MEDIAN_SERR " + format_full(median) + "\n";
  for (std::size_t i = 0; i < n; ++i) {
    out += std::to_string(report.selected_indices[i]);
    out += ' ';
    out += format_full(selection.points[i].x);
    out += ' ';
    out += format_full(selection.points[i].y);
    out += ' ';
    out += format_full(selection.smears[i].u);
    out += ' ';
    out += format_full(selection.smears[i].v);
    out += ' ';
    out += format_full(report.per_smear_error[i]);
    out += ' ';
    out += report.directions[i] == TimeDirection::kStartToEnd ? "fwd" : "bwd";
    out += ' ';
    out += report.inlier_mask[i] ? '1' : '0';
    out += '\n';
  }
  write_text_atomic(path, out);
}

ReportFile read_report(const fs::path& path) {
  auto in = open_input(path);
  ReportFile rf;
  rf.f = fmat_from_stream(in);
  expect_token(in, "INLIERS");
  std::string frac;
  if (!(in >> frac)) throw IoError("report: missing inlier fraction");
  const auto slash = frac.find('/');
  if (slash == std::string::npos) throw IoError("report: malformed INLIERS line");
  rf.inlier_count = std::stoull(frac.substr(0, slash));
  rf.total = std::stoull(frac.substr(slash + 1));
  expect_token(in, "MEDIAN_SERR");
  rf.median_serr = read_double(in, "median");
  rf.rows.resize(rf.total);
  for (auto& row : rf.rows) {
    row.index = static_cast<std::size_t>(read_double(in, "index"));
    row.point.x = read_double(in, "x");
    row.point.y = read_double(in, "y");
    row.smear.u = read_double(in, "u");
    row.smear.v = read_double(in, "v");
    row.serr = read_double(in, "serr");
    std::string dir;
    if (!(in >> dir)) throw IoError("report: missing direction");
    if (dir == "fwd") {
      row.direction = TimeDirection::kStartToEnd;
    } else if (dir == "bwd") {
      row.direction = TimeDirection::kEndToStart;
    } else {
      throw IoError("report: unknown direction token: " + dir);
    }
    row.inlier = read_double(in, "inlier") != 0.0;
  }
  return rf;
}

std::vector<ImagePoint> read_points(const fs::path& path) {
  auto in = open_input(path);
  std::vector<ImagePoint> points;
  double x = 0.0;
  while (in >> x) {
    ImagePoint p;
    p.x = x;
    p.y = read_double(in, "point y");
    points.push_back(p);
  }
  return points;
}

namespace {

void write_binary_atomic(const fs::path& path, const std::string& bytes) {
  write_text_atomic(path, bytes);  // streams are opened in binary mode
}

}  // namespace

void write_pgm16(const fs::path& path, const ImageGray& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n65535\n";
  out.reserve(out.size() + img.px.size() * 2);
  for (double v : img.px) {
    const auto q = static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
    out += static_cast<char>((q >> 8) & 0xff);  // big-endian per netpbm
    out += static_cast<char>(q & 0xff);
  }
  write_binary_atomic(path, out);
}

void write_mask_pgm(const fs::path& path, const std::vector<std::uint8_t>& mask,
                    int width, int height) {
  if (mask.size() != static_cast<std::size_t>(width) * height) {
    throw DimensionMismatch("write_mask_pgm: mask size mismatch");
  }
  std::string out = "P5\n" + std::to_string(width) + " " +
                    std::to_string(height) + "\n255\n";
  for (auto m : mask) {
    const std::uint8_t v = m == 0 ? 0 : (m == 1 ? 255 : 128);
    out += static_cast<char>(v);
  }
  write_binary_atomic(path, out);
}

void write_ppm(const fs::path& path, const ImageRgb& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.reserve(out.size() + img.px.size() * 3);
  for (const auto& p : img.px) {
    out += static_cast<char>(p[0]);
    out += static_cast<char>(p[1]);
    out += static_cast<char>(p[2]);
  }
  write_binary_atomic(path, out);
}

namespace {

int next_pnm_int(std::istream& in) {
  // Netpbm headers allow '#' comments anywhere in the whitespace.
  while (true) {
    const int c = in.peek();
    if (c == EOF) throw IoError("netpbm: truncated header");
    if (std::isspace(c)) {
      in.get();
    } else if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else {
      break;
    }
  }
  int v = 0;
  if (!(in >> v)) throw IoError("netpbm: malformed header");
  return v;
}

}  // namespace

ImageRgb read_netpbm(const fs::path& path) {
  auto in = open_input(path);
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P6") {
    throw IoError("netpbm: unsupported magic '" + magic + "' in " + path.string());
  }
  const int w = next_pnm_int(in);
  const int h = next_pnm_int(in);
  const int maxval = next_pnm_int(in);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
    throw IoError("netpbm: bad header in " + path.string());
  }
  in.get();  // single whitespace byte after maxval

  const int channels = magic == "P6" ? 3 : 1;
  const int bytes_per = maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(w) * h * channels * bytes_per;
  std::string raster(count, '\0');
  in.read(raster.data(), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) {
    throw IoError("netpbm: truncated raster in " + path.string());
  }

  ImageRgb img(w, h);
  const auto value_at = [&](std::size_t sample) -> std::uint8_t {
    if (bytes_per == 1) {
      const auto raw = static_cast<std::uint8_t>(raster[sample]);
      return static_cast<std::uint8_t>(raw * 255 / maxval);
    }
    const auto hi = static_cast<std::uint8_t>(raster[2 * sample]);
    const auto lo = static_cast<std::uint8_t>(raster[2 * sample + 1]);
    return static_cast<std::uint8_t>((hi << 8 | lo) * 255 / maxval);
  };
  for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i) {
    if (channels == 3) {
      img.px[i] = {value_at(3 * i), value_at(3 * i + 1), value_at(3 * i + 2)};
    } else {
      const std::uint8_t v = value_at(i);
      img.px[i] = {v, v, v};
    }
  }
  return img;
}

}  // namespace smearfm
