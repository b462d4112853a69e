#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace chronodce {

// --- artifact hashing ----------------------------------------------------

inline std::uint64_t fnv1a64(const char* data, std::size_t len) {
  std::uint64_t h = 14695981039346656037ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("hash_file: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(bytes.data(), bytes.size());
  return hex.str();
}

// --- experiment manifest ---------------------------------------------------

// manifest.json in an experiment directory records every artifact a command
// produced: kind, relative file name, content hash, and the config blob that
// made it. Reports refuse to run unless every hash still matches.
inline void manifest_register(const std::string& dir, const std::string& kind,
                              const std::vector<std::string>& files,
                              const nlohmann::ordered_json& config) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path mpath = fs::path(dir) / "manifest.json";
  nlohmann::ordered_json manifest;
  if (fs::exists(mpath)) {
    std::ifstream in(mpath, std::ios::binary);
    in >> manifest;
    if (!manifest.contains("entries"))
      throw std::runtime_error("manifest_register: " + mpath.string() +
                               " is not an experiment manifest (is this a dataset directory?)");
  } else {
    manifest["experiment"] = fs::path(dir).filename().string();
    manifest["entries"] = nlohmann::ordered_json::array();
  }
  nlohmann::ordered_json entry;
  entry["kind"] = kind;
  entry["config"] = config;
  auto& flist = entry["files"] = nlohmann::ordered_json::array();
  for (const auto& f : files)
    flist.push_back({{"file", f}, {"hash", hash_file((fs::path(dir) / f).string())}});
  // Re-registering an artifact set replaces the previous entry of the same
  // kind and leading file.
  auto& entries = manifest["entries"];
  for (auto it = entries.begin(); it != entries.end();) {
    const bool same = (*it)["kind"] == kind && !files.empty() && !(*it)["files"].empty() &&
                      (*it)["files"][0]["file"] == files[0];
    it = same ? entries.erase(it) : ++it;
  }
  entries.push_back(entry);
  std::ofstream out(mpath, std::ios::binary);
  if (!out) throw std::runtime_error("manifest_register: cannot write " + mpath.string());
  out << manifest.dump(2);
}

inline nlohmann::json manifest_load_verified(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path mpath = fs::path(dir) / "manifest.json";
  std::ifstream in(mpath, std::ios::binary);
  if (!in) throw std::runtime_error("manifest: no manifest.json in " + dir);
  nlohmann::json manifest;
  in >> manifest;
  for (const auto& entry : manifest.at("entries"))
    for (const auto& f : entry.at("files")) {
      const std::string name = f.at("file");
      const fs::path path = fs::path(dir) / name;
      if (!fs::exists(path))
        throw std::runtime_error("manifest: missing artifact " + name);
      const std::string actual = hash_file(path.string());
      if (actual != f.at("hash").get<std::string>())
        throw std::runtime_error("manifest: hash mismatch for " + name);
    }
  return manifest;
}

// --- SVG plotting ----------------------------------------------------------

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

namespace detail {

inline const char* plot_color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  return palette[i % 8];
}

inline std::string fmt_tick(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

}  // namespace detail

// Minimal line chart; enough for accuracy-vs-epsilon curves and per-frame
// probe values.
inline std::string svg_line_chart(const std::string& title, const std::string& xlabel,
                                  const std::string& ylabel,
                                  const std::vector<PlotSeries>& series, int width = 720,
                                  int height = 440) {
  if (series.empty()) throw std::invalid_argument("svg_line_chart: no series");
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  const double pad_y = 0.05 * (ymax - ymin);
  ymin -= pad_y;
  ymax += pad_y;
  const int ml = 70, mr = 20, mt = 40, mb = 50;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">"
      << title << "</text>\n";
  // axes + ticks
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
      << mt + ph << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    svg << "<text x=\"" << px(xv) << "\" y=\"" << mt + ph + 18
        << "\" text-anchor=\"middle\">" << detail::fmt_tick(xv) << "</text>\n";
    svg << "<text x=\"" << ml - 8 << "\" y=\"" << py(yv) + 4
        << "\" text-anchor=\"end\">" << detail::fmt_tick(yv) << "</text>\n";
    svg << "<line x1=\"" << ml << "\" y1=\"" << py(yv) << "\" x2=\"" << ml + pw << "\" y2=\""
        << py(yv) << "\" stroke=\"#dddddd\"/>\n";
  }
  svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  svg << "<text x=\"16\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << mt + ph / 2 << ")\">"
      << ylabel << "</text>\n";
  for (std::size_t si = 0; si < series.size(); ++si) {
    svg << "<polyline fill=\"none\" stroke=\"" << detail::plot_color(si)
        << "\" stroke-width=\"1.8\" points=\"";
    for (const auto& [x, y] : series[si].points) svg << px(x) << "," << py(y) << " ";
    svg << "\"/>\n";
    svg << "<text x=\"" << ml + pw - 6 << "\" y=\"" << mt + 16 + 16 * si
        << "\" text-anchor=\"end\" fill=\"" << detail::plot_color(si) << "\">"
        << series[si].label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path);
}

// --- CSV helpers -------------------------------------------------------------

inline std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_csv: cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace chronodce
