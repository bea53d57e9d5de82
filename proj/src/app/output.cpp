#include "vclass/app/output.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

namespace vclass::app {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.12g}", v);
}

nlohmann::ordered_json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return std::stod(fmt::format("{:.12g}", v));
}

OutputSet::~OutputSet() {
  if (committed_) return;
  std::error_code ec;
  for (const auto& [tmp, _] : staged_) std::filesystem::remove(tmp, ec);
}

void OutputSet::add(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".partial";
  std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::ios_base::failure("cannot open " + tmp.string() + " for writing");
  }
  staged_.emplace_back(tmp, path);
  out << content;
  out.close();
  if (!out) {
    throw std::ios_base::failure("write failed for " + tmp.string());
  }
}

void OutputSet::commit() {
  for (const auto& [tmp, final_path] : staged_) {
    std::filesystem::rename(tmp, final_path);
  }
  committed_ = true;
}

}  // namespace vclass::app
