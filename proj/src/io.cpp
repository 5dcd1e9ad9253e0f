#include "supcal/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "supcal/errors.hpp"

namespace supcal {

namespace fs = std::filesystem;

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_file_atomic(const fs::path& path, const std::string& data) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoFailure("cannot open for writing: " + tmp.string());
    }
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoFailure("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoFailure("rename failed: " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoFailure("cannot open: " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) {
    throw IoFailure("read failed: " + path.string());
  }
  return ss.str();
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    fields.push_back(field);
  }
  return fields;
}

double parse_double(const std::string& s, const fs::path& path) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw IoFailure("malformed number '" + s + "' in " + path.string());
  }
  return v;
}

std::int64_t parse_int(const std::string& s, const fs::path& path) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    throw IoFailure("malformed integer '" + s + "' in " + path.string());
  }
  return v;
}

// Returns non-empty lines; validates the header.
std::vector<std::string> read_csv_lines(const fs::path& path,
                                        const std::string& header) {
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (!line.empty()) {
      lines.push_back(line);
    }
  }
  if (lines.empty() || lines.front() != header) {
    throw IoFailure("missing or wrong header in " + path.string() +
                    " (expected '" + header + "')");
  }
  lines.erase(lines.begin());
  return lines;
}

}  // namespace

void save_scene_points(std::span<const ScenePoint> points,
                       const fs::path& path) {
  std::string out = "x,y,z,class_id,point_id\n";
  for (const auto& pt : points) {
    out += format_double(pt.position.x());
    out += ',';
    out += format_double(pt.position.y());
    out += ',';
    out += format_double(pt.position.z());
    out += ',';
    out += std::to_string(pt.class_id);
    out += ',';
    out += std::to_string(pt.point_id);
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<ScenePoint> load_scene_points(const fs::path& path) {
  std::vector<ScenePoint> points;
  for (const auto& line : read_csv_lines(path, "x,y,z,class_id,point_id")) {
    const auto fields = split_line(line);
    if (fields.size() != 5) {
      throw IoFailure("expected 5 fields in " + path.string());
    }
    ScenePoint pt;
    pt.position = {parse_double(fields[0], path), parse_double(fields[1], path),
                   parse_double(fields[2], path)};
    pt.class_id = static_cast<int>(parse_int(fields[3], path));
    pt.point_id = parse_int(fields[4], path);
    points.push_back(pt);
  }
  return points;
}

void save_correspondences(std::span<const Correspondence> corrs,
                          const fs::path& path) {
  std::string out = "point_id,class_id,u,v,du,dv\n";
  for (const auto& corr : corrs) {
    out += std::to_string(corr.point_id);
    out += ',';
    out += std::to_string(corr.class_id);
    out += ',';
    out += format_double(corr.u.u);
    out += ',';
    out += format_double(corr.u.v);
    out += ',';
    out += format_double(corr.f.x());
    out += ',';
    out += format_double(corr.f.y());
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<Correspondence> load_correspondences(const fs::path& path) {
  std::vector<Correspondence> corrs;
  for (const auto& line :
       read_csv_lines(path, "point_id,class_id,u,v,du,dv")) {
    const auto fields = split_line(line);
    if (fields.size() != 6) {
      throw IoFailure("expected 6 fields in " + path.string());
    }
    Correspondence corr;
    corr.point_id = parse_int(fields[0], path);
    corr.class_id = static_cast<int>(parse_int(fields[1], path));
    corr.u = {parse_double(fields[2], path), parse_double(fields[3], path)};
    corr.f = {parse_double(fields[4], path), parse_double(fields[5], path)};
    corr.u_matched = {corr.u.u + corr.f.x(), corr.u.v + corr.f.y()};
    corrs.push_back(corr);
  }
  return corrs;
}

}  // namespace supcal
