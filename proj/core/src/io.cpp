#include "ivuscal/io.hpp"

#include <Eigen/SVD>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

namespace ivuscal {

namespace {

std::string fmt(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

// Shortest representation that parses back to the identical double. Used for
// poses, where the loader's orthonormality handling must see exact values for
// save-load-save to be byte-identical.
std::string fmt_exact(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token, int line) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw ParseError("expected a number, got '" + token + "'", line);
  }
  return value;
}

long parse_int(const std::string& token, int line) {
  long value = 0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw ParseError("expected an integer, got '" + token + "'", line);
  }
  return value;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (const char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  return fields;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

// Reads one logical line; strips a trailing '\r' so CRLF inputs still parse.
bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

void expect_header(std::istream& in, const std::string& expected,
                   const std::filesystem::path& path) {
  std::string line;
  if (!next_line(in, line)) throw ParseError(path.string() + ": empty file", 1);
  if (line != expected) {
    throw ParseError(path.string() + ": header must be '" + expected + "'", 1);
  }
}

}  // namespace

void save_phantom(const PhantomModel& phantom, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "id,x_mm,y_mm,z_mm\n";
  for (std::size_t id = 0; id < phantom.landmarks.size(); ++id) {
    const Point3& p = phantom.landmarks[id];
    out << id << ',' << fmt(p.x()) << ',' << fmt(p.y()) << ',' << fmt(p.z()) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

PhantomModel load_phantom(const std::filesystem::path& path) {
  auto in = open_input(path);
  expect_header(in, "id,x_mm,y_mm,z_mm", path);

  std::vector<std::pair<long, Point3>> rows;
  std::set<long> seen;
  std::string line;
  for (int line_no = 2; next_line(in, line); ++line_no) {
    const auto fields = split_csv(line);
    if (fields.size() != 4) throw ParseError("expected 4 columns, got " +
                                             std::to_string(fields.size()), line_no);
    const long id = parse_int(fields[0], line_no);
    if (!seen.insert(id).second) {
      throw DuplicateId("duplicate landmark id " + std::to_string(id), line_no);
    }
    rows.emplace_back(id, Point3(parse_double(fields[1], line_no),
                                 parse_double(fields[2], line_no),
                                 parse_double(fields[3], line_no)));
  }
  if (rows.empty()) throw ParseError(path.string() + ": no landmarks", 1);

  PhantomModel model;
  model.landmarks.resize(rows.size());
  for (const auto& [id, point] : rows) {
    if (id < 0 || id >= static_cast<long>(rows.size())) {
      throw ParseError("landmark ids must be contiguous from 0 (found " + std::to_string(id) + ")");
    }
    model.landmarks[static_cast<std::size_t>(id)] = point;
  }
  return model;
}

void save_poses(const std::vector<TimedPose>& poses, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "frame,r00,r01,r02,tx_mm,r10,r11,r12,ty_mm,r20,r21,r22,tz_mm\n";
  for (const auto& tp : poses) {
    out << tp.frame;
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) out << ',' << fmt_exact(tp.pose.rotation(row, col));
      out << ',' << fmt_exact(tp.pose.translation(row));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<TimedPose> load_poses(const std::filesystem::path& path) {
  auto in = open_input(path);
  expect_header(in, "frame,r00,r01,r02,tx_mm,r10,r11,r12,ty_mm,r20,r21,r22,tz_mm", path);

  std::vector<TimedPose> poses;
  std::set<long> seen;
  std::string line;
  for (int line_no = 2; next_line(in, line); ++line_no) {
    const auto fields = split_csv(line);
    if (fields.size() != 13) throw ParseError("expected 13 columns, got " +
                                              std::to_string(fields.size()), line_no);
    TimedPose tp;
    tp.frame = static_cast<int>(parse_int(fields[0], line_no));
    if (!seen.insert(tp.frame).second) {
      throw DuplicateId("duplicate pose for frame " + std::to_string(tp.frame), line_no);
    }
    Eigen::Matrix3d raw;
    std::size_t f = 1;
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) raw(row, col) = parse_double(fields[f++], line_no);
      tp.pose.translation(row) = parse_double(fields[f++], line_no);
    }

    // Nearest proper orthogonal projection. When the correction is at
    // floating-point noise level the parsed matrix is kept, which makes
    // save-load-save byte-identical; corrections above 1e-3 are rejected.
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(raw, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d nearest = svd.matrixU() * svd.matrixV().transpose();
    if (nearest.determinant() < 0.0) {
      throw NonRigidPose("rotation for frame " + std::to_string(tp.frame) +
                         " is a reflection (det -1)", line_no);
    }
    const double correction = (nearest - raw).norm();
    if (correction > 1e-3) {
      throw NonRigidPose("rotation for frame " + std::to_string(tp.frame) +
                         " is too far from orthonormal", line_no);
    }
    tp.pose.rotation = correction > 1e-10 ? nearest : raw;
    poses.push_back(tp);
  }
  return poses;
}

void save_observations(const std::vector<LandmarkObservation>& observations,
                       const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "frame,landmark_id,u_px,v_px\n";
  for (const auto& obs : observations) {
    out << obs.frame << ',' << obs.landmark_id << ',' << fmt(obs.u_px) << ',' << fmt(obs.v_px)
        << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<LandmarkObservation> load_observations(const std::filesystem::path& path) {
  auto in = open_input(path);
  expect_header(in, "frame,landmark_id,u_px,v_px", path);

  std::vector<LandmarkObservation> observations;
  std::set<std::pair<long, long>> seen;
  std::string line;
  for (int line_no = 2; next_line(in, line); ++line_no) {
    const auto fields = split_csv(line);
    if (fields.size() != 4) throw ParseError("expected 4 columns, got " +
                                             std::to_string(fields.size()), line_no);
    LandmarkObservation obs;
    obs.frame = static_cast<int>(parse_int(fields[0], line_no));
    obs.landmark_id = static_cast<int>(parse_int(fields[1], line_no));
    obs.u_px = parse_double(fields[2], line_no);
    obs.v_px = parse_double(fields[3], line_no);
    if (!seen.insert({obs.frame, obs.landmark_id}).second) {
      throw DuplicateId("duplicate observation for frame " + std::to_string(obs.frame) +
                        ", landmark " + std::to_string(obs.landmark_id), line_no);
    }
    observations.push_back(obs);
  }
  return observations;
}

namespace {

constexpr const char* kCalibMagic = "ivuscal_calibration";
constexpr const char* kEulerTag = "ZYX-extrinsic-rzryrx";

}  // namespace

void save_calibration(const CalibrationResult& result, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << kCalibMagic << " 1\n";
  out << "euler_convention " << kEulerTag << '\n';
  out << "roll_rad " << fmt(result.params.roll_rad) << '\n';
  out << "pitch_rad " << fmt(result.params.pitch_rad) << '\n';
  out << "yaw_rad " << fmt(result.params.yaw_rad) << '\n';
  out << "tx_mm " << fmt(result.params.tx_mm) << '\n';
  out << "ty_mm " << fmt(result.params.ty_mm) << '\n';
  out << "tz_mm " << fmt(result.params.tz_mm) << '\n';
  out << "scale_mm_per_px " << fmt(result.params.scale_mm_per_px) << '\n';
  out << "matrix";
  for (int row = 0; row < 4; ++row) {
    for (int col = 0; col < 4; ++col) out << ' ' << fmt(result.matrix.m(row, col));
  }
  out << '\n';
  out << "final_error_mm2 " << fmt(result.final_error_mm2) << '\n';
  out << "iterations " << result.iterations << '\n';
  out << "converged " << (result.converged ? "true" : "false") << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

CalibrationResult load_calibration(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!next_line(in, line)) throw ParseError(path.string() + ": empty file", 1);
  {
    std::istringstream head(line);
    std::string magic;
    long version = -1;
    head >> magic >> version;
    if (magic != kCalibMagic) throw ParseError(path.string() + ": not a calibration file", 1);
    if (version != 1) {
      throw VersionMismatch("unsupported calibration version " + std::to_string(version));
    }
  }

  std::unordered_map<std::string, std::string> kv;
  int line_no = 1;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto space = line.find(' ');
    if (space == std::string::npos) throw ParseError("expected 'key value'", line_no);
    const std::string key = line.substr(0, space);
    if (!kv.emplace(key, line.substr(space + 1)).second) {
      throw ParseError("duplicate key '" + key + "'", line_no);
    }
  }

  const auto need = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(path.string() + ": missing key '" + std::string(key) + "'");
    return it->second;
  };

  if (need("euler_convention") != kEulerTag) {
    throw ParseError(path.string() + ": unsupported euler_convention");
  }

  CalibrationResult result;
  result.params.roll_rad = parse_double(need("roll_rad"), 0);
  result.params.pitch_rad = parse_double(need("pitch_rad"), 0);
  result.params.yaw_rad = parse_double(need("yaw_rad"), 0);
  result.params.tx_mm = parse_double(need("tx_mm"), 0);
  result.params.ty_mm = parse_double(need("ty_mm"), 0);
  result.params.tz_mm = parse_double(need("tz_mm"), 0);
  result.params.scale_mm_per_px = parse_double(need("scale_mm_per_px"), 0);
  result.final_error_mm2 = parse_double(need("final_error_mm2"), 0);
  result.iterations = static_cast<int>(parse_int(need("iterations"), 0));

  const std::string& conv = need("converged");
  if (conv == "true") {
    result.converged = true;
  } else if (conv == "false") {
    result.converged = false;
  } else {
    throw ParseError("converged must be true or false");
  }

  {
    std::istringstream ms(need("matrix"));
    for (int row = 0; row < 4; ++row) {
      for (int col = 0; col < 4; ++col) {
        if (!(ms >> result.matrix.m(row, col))) {
          throw ParseError(path.string() + ": matrix needs 16 entries");
        }
      }
    }
    std::string extra;
    if (ms >> extra) throw ParseError(path.string() + ": matrix has more than 16 entries");
  }

  result.params.validate();
  const Homogeneous4 reference = calibration_matrix(result.params);
  if (((reference.m - result.matrix.m).array().abs() > 1e-6).any()) {
    throw ParseError(path.string() + ": matrix inconsistent with parameters");
  }
  return result;
}

void save_volume(const VoxelVolume& volume, const std::string& path_prefix) {
  const std::filesystem::path meta_path = path_prefix + ".meta";
  const std::filesystem::path raw_path = path_prefix + ".raw";

  {
    auto out = open_output(meta_path);
    out << "ivuscal_volume 1\n";
    out << "dims " << volume.dims[0] << ' ' << volume.dims[1] << ' ' << volume.dims[2] << '\n';
    out << "spacing_mm " << fmt(volume.spacing_mm) << '\n';
    out << "origin_mm " << fmt(volume.origin_mm.x()) << ' ' << fmt(volume.origin_mm.y()) << ' '
        << fmt(volume.origin_mm.z()) << '\n';
    out << "compounding " << to_string(volume.compounding) << '\n';
    out << "element_type f32-le\n";
    out << "order x-fastest\n";
    out << "data_file " << raw_path.filename().string() << '\n';
    if (!out) throw IoError("write failed: " + meta_path.string());
  }

  static_assert(std::endian::native == std::endian::little,
                "raw volume payload is little-endian");
  auto out = open_output(raw_path);
  std::vector<float> payload(volume.data.size());
  for (std::size_t i = 0; i < volume.data.size(); ++i) {
    payload[i] = static_cast<float>(volume.data[i]);
  }
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
  if (!out) throw IoError("write failed: " + raw_path.string());
}

VoxelVolume load_volume(const std::string& path_prefix) {
  const std::filesystem::path meta_path = path_prefix + ".meta";
  auto in = open_input(meta_path);

  VoxelVolume volume;
  std::string data_file;
  std::string line;
  int line_no = 0;
  bool have_magic = false;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (line_no == 1) {
      long version = -1;
      ls >> version;
      if (key != "ivuscal_volume") throw ParseError(meta_path.string() + ": not a volume file", 1);
      if (version != 1) throw VersionMismatch("unsupported volume version");
      have_magic = true;
      continue;
    }
    if (key == "dims") {
      if (!(ls >> volume.dims[0] >> volume.dims[1] >> volume.dims[2])) {
        throw ParseError("dims needs 3 integers", line_no);
      }
    } else if (key == "spacing_mm") {
      ls >> volume.spacing_mm;
    } else if (key == "origin_mm") {
      ls >> volume.origin_mm.x() >> volume.origin_mm.y() >> volume.origin_mm.z();
    } else if (key == "compounding") {
      std::string mode;
      ls >> mode;
      volume.compounding = compounding_from_string(mode);
    } else if (key == "element_type") {
      std::string type;
      ls >> type;
      if (type != "f32-le") throw ParseError("unsupported element_type " + type, line_no);
    } else if (key == "order") {
      std::string order;
      ls >> order;
      if (order != "x-fastest") throw ParseError("unsupported order " + order, line_no);
    } else if (key == "data_file") {
      ls >> data_file;
    } else {
      throw ParseError("unknown key '" + key + "'", line_no);
    }
  }
  if (!have_magic) throw ParseError(meta_path.string() + ": empty file", 1);
  if (volume.dims[0] < 1 || volume.dims[1] < 1 || volume.dims[2] < 1 || !(volume.spacing_mm > 0)) {
    throw ParseError(meta_path.string() + ": missing or invalid dims/spacing");
  }
  if (data_file.empty()) throw ParseError(meta_path.string() + ": missing data_file");

  const std::filesystem::path raw_path = meta_path.parent_path() / data_file;
  auto raw = open_input(raw_path);
  const std::size_t count = volume.voxel_count();
  std::vector<float> payload(count);
  raw.read(reinterpret_cast<char*>(payload.data()),
           static_cast<std::streamsize>(count * sizeof(float)));
  if (static_cast<std::size_t>(raw.gcount()) != count * sizeof(float)) {
    throw ParseError(raw_path.string() + ": payload shorter than dims imply");
  }
  char extra;
  if (raw.read(&extra, 1); raw.gcount() != 0) {
    throw ParseError(raw_path.string() + ": payload longer than dims imply");
  }

  volume.data.assign(payload.begin(), payload.end());
  volume.weight.assign(count, 0.0);
  return volume;
}

void save_pgm(const FrameImage& frame, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "P5\n" << frame.width << ' ' << frame.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(frame.pixels.data()),
            static_cast<std::streamsize>(frame.pixels.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

FrameImage load_pgm(const std::filesystem::path& path) {
  auto in = open_input(path);

  // Header tokens may be separated by whitespace and '#' comments.
  const auto next_token = [&]() -> std::string {
    std::string token;
    int c;
    while ((c = in.get()) != EOF) {
      if (c == '#') {
        while ((c = in.get()) != EOF && c != '\n') {
        }
        continue;
      }
      if (std::isspace(c)) {
        if (!token.empty()) return token;
        continue;
      }
      token.push_back(static_cast<char>(c));
    }
    return token;
  };

  if (next_token() != "P5") throw ParseError(path.string() + ": not a binary PGM (P5)");
  FrameImage frame;
  frame.width = static_cast<int>(parse_int(next_token(), 0));
  frame.height = static_cast<int>(parse_int(next_token(), 0));
  const long maxval = parse_int(next_token(), 0);
  if (frame.width < 1 || frame.height < 1) throw ParseError(path.string() + ": bad dimensions");
  if (maxval != 255) throw ParseError(path.string() + ": maxval must be 255");

  const std::size_t count = static_cast<std::size_t>(frame.width) * frame.height;
  frame.pixels.resize(count);
  in.read(reinterpret_cast<char*>(frame.pixels.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) {
    throw ParseError(path.string() + ": truncated pixel data");
  }
  return frame;
}

void save_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "ivuscal_manifest " << manifest.format_version << '\n';
  out << "poses " << manifest.poses_path << '\n';
  out << "observations " << manifest.observations_path << '\n';
  out << "frames " << (manifest.frames_dir.empty() ? "-" : manifest.frames_dir) << '\n';
  out << "depth_mm " << fmt(manifest.depth_mm) << '\n';
  out << "notes " << manifest.notes << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Manifest load_manifest(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  if (!next_line(in, line)) throw ParseError(path.string() + ": empty file", 1);
  {
    std::istringstream head(line);
    std::string magic;
    long version = -1;
    head >> magic >> version;
    if (magic != "ivuscal_manifest") throw ParseError(path.string() + ": not a manifest", 1);
    if (version != 1) throw VersionMismatch("unsupported manifest version");
  }

  Manifest manifest;
  int line_no = 1;
  while (next_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto space = line.find(' ');
    const std::string key = line.substr(0, space == std::string::npos ? line.size() : space);
    const std::string value = space == std::string::npos ? "" : line.substr(space + 1);
    if (key == "poses") {
      manifest.poses_path = value;
    } else if (key == "observations") {
      manifest.observations_path = value;
    } else if (key == "frames") {
      manifest.frames_dir = value == "-" ? "" : value;
    } else if (key == "depth_mm") {
      manifest.depth_mm = parse_double(value, line_no);
    } else if (key == "notes") {
      manifest.notes = value;
    } else {
      throw ParseError("unknown key '" + key + "'", line_no);
    }
  }

  const auto base = path.parent_path();
  const auto check = [&](const std::string& rel, const char* what) {
    if (rel.empty()) throw ParseError(path.string() + ": missing " + std::string(what));
    if (!std::filesystem::exists(base / rel)) {
      throw IoError(path.string() + ": referenced " + std::string(what) + " '" + rel +
                    "' does not exist");
    }
  };
  check(manifest.poses_path, "poses file");
  check(manifest.observations_path, "observations file");
  if (!manifest.frames_dir.empty()) check(manifest.frames_dir, "frames directory");
  return manifest;
}

std::string frame_file_name(int frame) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06d.pgm", frame);
  return buf;
}

}  // namespace ivuscal
