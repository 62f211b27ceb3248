#include "thir/dataset.hpp"

#include "thir/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

namespace thir {

namespace fs = std::filesystem;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_image_file(const fs::path& p) {
  const auto ext = lower(p.extension().string());
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

// SOB_B_TA-14-4659-40-001: class, subtype, year, slide, magnification, sequence.
const std::regex& breakhis_stem() {
  static const std::regex re(R"(^SOB_([BM])_[A-Za-z]+-\d+-[0-9A-Za-z]+-(40|100|200|400)-\d+$)");
  return re;
}

}  // namespace

std::string_view to_string(Label label) noexcept {
  switch (label) {
    case Label::Benign: return "benign";
    case Label::Malignant: return "malignant";
    case Label::Unknown: break;
  }
  return "unknown";
}

std::optional<Label> parse_label(std::string_view text) {
  const auto t = lower(trim(text));
  if (t == "benign" || t == "0") return Label::Benign;
  if (t == "malignant" || t == "1") return Label::Malignant;
  if (t == "unknown" || t.empty()) return Label::Unknown;
  return std::nullopt;
}

std::string to_string(Magnification mag) {
  if (mag == Magnification::Unspecified) return "unspecified";
  return std::to_string(static_cast<int>(mag));
}

std::optional<Magnification> magnification_from_int(int value) {
  switch (value) {
    case 0: return Magnification::Unspecified;
    case 40: return Magnification::X40;
    case 100: return Magnification::X100;
    case 200: return Magnification::X200;
    case 400: return Magnification::X400;
    default: return std::nullopt;
  }
}

std::optional<Magnification> parse_magnification(std::string_view text) {
  auto t = lower(trim(text));
  if (t.empty() || t == "unspecified") return Magnification::Unspecified;
  if (t.back() == 'x') t.pop_back();
  if (t.empty() || !std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return std::nullopt;
  }
  if (t.size() > 4) return std::nullopt;
  const auto mag = magnification_from_int(std::stoi(t));
  if (mag == Magnification::Unspecified) return std::nullopt;
  return mag;
}

std::pair<Label, Magnification> parse_record_path(const fs::path& relative) {
  Label label = Label::Unknown;
  Magnification mag = Magnification::Unspecified;

  for (const auto& segment : relative.parent_path()) {
    const auto s = lower(segment.string());
    if (label == Label::Unknown) {
      if (s.find("malignant") != std::string::npos) {
        label = Label::Malignant;
      } else if (s.find("benign") != std::string::npos) {
        label = Label::Benign;
      }
    }
    if (mag == Magnification::Unspecified && (s == "40x" || s == "100x" || s == "200x" || s == "400x")) {
      mag = *parse_magnification(s);
    }
  }

  const auto stem = relative.stem().string();
  if (label == Label::Unknown) {
    if (stem.find("_B_") != std::string::npos) {
      label = Label::Benign;
    } else if (stem.find("_M_") != std::string::npos) {
      label = Label::Malignant;
    }
  }
  if (mag == Magnification::Unspecified) {
    std::smatch m;
    if (std::regex_match(stem, m, breakhis_stem())) mag = *magnification_from_int(std::stoi(m[2].str()));
  }
  return {label, mag};
}

namespace {

struct ManifestRow {
  Label label;
  Magnification magnification;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::map<std::string, ManifestRow> read_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error(ErrorKind::ManifestParseError, "cannot open manifest " + manifest.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::ManifestParseError, "manifest is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() != 3 || trim(header[0]) != "path" || trim(header[1]) != "label" ||
      trim(header[2]) != "magnification") {
    throw Error(ErrorKind::ManifestParseError, "expected header path,label,magnification");
  }

  std::map<std::string, ManifestRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    const auto where = manifest.string() + ":" + std::to_string(line_no);
    if (fields.size() != 3) throw Error(ErrorKind::ManifestParseError, where + ": expected 3 fields");
    const auto label = parse_label(fields[1]);
    if (!label) throw Error(ErrorKind::ManifestParseError, where + ": bad label '" + fields[1] + "'");
    const auto mag = parse_magnification(fields[2]);
    if (!mag) throw Error(ErrorKind::ManifestParseError, where + ": bad magnification '" + fields[2] + "'");
    const auto key = fs::path(std::string(trim(fields[0]))).lexically_normal().generic_string();
    rows[key] = {*label, *mag};
  }
  return rows;
}

}  // namespace

std::vector<DatasetRecord> scan_dataset(const fs::path& root, const std::optional<fs::path>& manifest) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw Error(ErrorKind::FileNotFound, "dataset root " + root.string());

  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(root, fs::directory_options::follow_directory_symlink);
       it != fs::recursive_directory_iterator(); ++it) {
    if (it->is_regular_file() && is_image_file(it->path())) {
      files.push_back(it->path().lexically_relative(root).lexically_normal());
    }
  }
  if (files.empty()) throw Error(ErrorKind::EmptyDataset, "no PNG/JPEG files under " + root.string());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });

  std::map<std::string, ManifestRow> rows;
  if (manifest) {
    rows = read_manifest(*manifest);
    for (const auto& [key, row] : rows) {
      if (!std::binary_search(files.begin(), files.end(), fs::path(key),
                              [](const fs::path& a, const fs::path& b) {
                                return a.generic_string() < b.generic_string();
                              })) {
        throw Error(ErrorKind::ManifestParseError, "manifest entry not found under root: " + key);
      }
    }
  }

  std::vector<DatasetRecord> records;
  records.reserve(files.size());
  for (const auto& file : files) {
    DatasetRecord rec;
    rec.id = static_cast<std::uint32_t>(records.size());
    rec.path = file;
    if (auto it = rows.find(file.generic_string()); it != rows.end()) {
      rec.label = it->second.label;
      rec.magnification = it->second.magnification;
    } else {
      std::tie(rec.label, rec.magnification) = parse_record_path(file);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace thir
