#include "thir/index.hpp"

#include "thir/error.hpp"
#include "thir/parallel.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>

namespace thir {

std::string_view to_string(RangePolicy policy) noexcept {
  return policy == RangePolicy::FixedFullScale ? "full" : "per-image";
}

TopoDescriptor extract_descriptor(const RgbImage& img, const BettiCurveSpec& spec, const ResizeDims& resize_to) {
  return descriptor(resize(img, resize_to.width, resize_to.height), spec);
}

BuildResult build_index(const std::vector<DatasetRecord>& records, const BettiCurveSpec& spec,
                        const ResizeDims& resize_to, const BuildOptions& options) {
  if (records.empty()) throw Error(ErrorKind::EmptyDataset, "no records to index");
  if (spec.resolution < 1 || spec.resolution > 0xFFFF) {
    throw Error(ErrorKind::InvalidArgument, "resolution must be in [1, 65535]");
  }

  const int dim = 3 * spec.resolution;
  DescriptorMatrix rows(static_cast<Eigen::Index>(records.size()), dim);
  std::vector<std::optional<std::string>> failures(records.size());

  parallel_for(records.size(), options.workers, [&](std::size_t i) {
    const auto path = options.root.empty() ? records[i].path : options.root / records[i].path;
    try {
      rows.row(static_cast<Eigen::Index>(i)) = extract_descriptor(load_image(path), spec, resize_to).transpose();
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });

  BuildResult result;
  Index& ix = result.index;
  ix.spec = spec;
  ix.resize = resize_to;
  std::vector<Eigen::Index> kept;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!failures[i]) {
      kept.push_back(static_cast<Eigen::Index>(i));
      continue;
    }
    if (!options.lenient) {
      throw Error(ErrorKind::BuildError, "cannot index " + records[i].path.string() + ": " + *failures[i]);
    }
    result.skipped.push_back(records[i].path.string() + ": " + *failures[i]);
  }
  if (kept.empty()) throw Error(ErrorKind::BuildError, "every record failed to load");

  ix.descriptors.resize(static_cast<Eigen::Index>(kept.size()), dim);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    DatasetRecord rec = records[kept[k]];
    rec.id = static_cast<std::uint32_t>(k);
    ix.records.push_back(std::move(rec));
    ix.descriptors.row(static_cast<Eigen::Index>(k)) = rows.row(kept[k]);
  }
  return result;
}

namespace {

constexpr std::array<char, 4> kMagic = {'T', 'H', 'I', 'R'};
constexpr std::uint16_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    static_assert(std::is_integral_v<T> || std::is_same_v<T, float>);
    std::array<char, sizeof(T)> bytes;
    if constexpr (std::is_same_v<T, float>) {
      put(std::bit_cast<std::uint32_t>(value));
      return;
    } else {
      using U = std::make_unsigned_t<T>;
      auto u = static_cast<U>(value);
      for (std::size_t i = 0; i < sizeof(T); ++i) {
        bytes[i] = static_cast<char>(u & 0xFF);
        if constexpr (sizeof(T) > 1) u = static_cast<U>(u >> 8);
      }
      out_.write(bytes.data(), bytes.size());
    }
  }

  void bytes(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
  T get(const char* what) {
    if constexpr (std::is_same_v<T, float>) {
      return std::bit_cast<float>(get<std::uint32_t>(what));
    } else {
      std::array<unsigned char, sizeof(T)> buf;
      read(reinterpret_cast<char*>(buf.data()), buf.size(), what);
      std::make_unsigned_t<T> u = 0;
      for (std::size_t i = sizeof(T); i-- > 0;) u = static_cast<decltype(u)>((u << 8) | buf[i]);
      return static_cast<T>(u);
    }
  }

  void read(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (got != n) {
      throw Error(ErrorKind::FormatError,
                  std::string("truncated ") + what + " at offset " + std::to_string(offset_ + got));
    }
    offset_ += n;
  }

  std::uint64_t offset() const { return offset_; }

 private:
  std::istream& in_;
  std::uint64_t offset_ = 0;
};

}  // namespace

void write_index(const Index& ix, std::ostream& out) {
  if (ix.descriptors.rows() != static_cast<Eigen::Index>(ix.size()) || ix.descriptors.cols() != ix.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "descriptor matrix does not match index shape");
  }
  Writer w(out);
  w.bytes(kMagic.data(), kMagic.size());
  w.put<std::uint16_t>(kVersion);
  w.put<std::uint16_t>(0);  // flags; 0 = bilinear half-pixel resize
  w.put<std::uint16_t>(static_cast<std::uint16_t>(ix.spec.resolution));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ix.dim()));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(ix.resize.width));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(ix.resize.height));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(ix.spec.range_policy));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ix.size()));
  for (const auto& rec : ix.records) {
    const auto path = rec.path.generic_string();
    if (path.size() > 0xFFFF) throw Error(ErrorKind::FormatError, "path too long: " + path);
    w.put<std::uint32_t>(rec.id);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(rec.label));
    w.put<std::uint16_t>(static_cast<std::uint16_t>(rec.magnification));
    w.put<std::uint16_t>(static_cast<std::uint16_t>(path.size()));
    w.bytes(path.data(), path.size());
  }
  if constexpr (std::endian::native == std::endian::little) {
    w.bytes(reinterpret_cast<const char*>(ix.descriptors.data()),
            static_cast<std::size_t>(ix.descriptors.size()) * sizeof(float));
  } else {
    for (Eigen::Index i = 0; i < ix.descriptors.size(); ++i) w.put<float>(ix.descriptors.data()[i]);
  }
  if (!out) throw Error(ErrorKind::IoError, "index write failed");
}

Index read_index(std::istream& in) {
  Reader r(in);
  std::array<char, 4> magic;
  r.read(magic.data(), magic.size(), "magic");
  if (magic != kMagic) throw Error(ErrorKind::FormatError, "bad magic (not a .thir file)");
  const auto version = r.get<std::uint16_t>("version");
  if (version != kVersion) throw Error(ErrorKind::FormatError, "unsupported version " + std::to_string(version));
  const auto flags = r.get<std::uint16_t>("flags");
  if (flags != 0) throw Error(ErrorKind::FormatError, "unsupported flags " + std::to_string(flags));

  Index ix;
  ix.spec.resolution = r.get<std::uint16_t>("resolution");
  const auto dim = r.get<std::uint32_t>("dim");
  ix.resize.width = r.get<std::uint16_t>("resize width");
  ix.resize.height = r.get<std::uint16_t>("resize height");
  const auto policy = r.get<std::uint8_t>("range policy");
  const auto count = r.get<std::uint32_t>("entry count");
  if (ix.spec.resolution < 1) throw Error(ErrorKind::FormatError, "resolution is zero");
  if (dim != static_cast<std::uint32_t>(ix.dim())) {
    throw Error(ErrorKind::DimensionMismatch,
                "dim " + std::to_string(dim) + " != 3 x resolution " + std::to_string(ix.spec.resolution));
  }
  if (policy > 1) throw Error(ErrorKind::FormatError, "unknown range policy " + std::to_string(policy));
  ix.spec.range_policy = static_cast<RangePolicy>(policy);

  ix.records.reserve(std::min<std::uint32_t>(count, 1u << 20));
  for (std::uint32_t i = 0; i < count; ++i) {
    DatasetRecord rec;
    rec.id = r.get<std::uint32_t>("entry id");
    if (rec.id != i) throw Error(ErrorKind::FormatError, "entry ids are not dense at entry " + std::to_string(i));
    const auto label = r.get<std::uint8_t>("label");
    if (label != 0 && label != 1 && label != 255) {
      throw Error(ErrorKind::FormatError, "bad label byte " + std::to_string(label));
    }
    rec.label = static_cast<Label>(label);
    const auto mag = magnification_from_int(r.get<std::uint16_t>("magnification"));
    if (!mag) throw Error(ErrorKind::FormatError, "bad magnification at entry " + std::to_string(i));
    rec.magnification = *mag;
    const auto len = r.get<std::uint16_t>("path length");
    std::string path(len, '\0');
    r.read(path.data(), len, "path");
    rec.path = path;
    ix.records.push_back(std::move(rec));
  }

  ix.descriptors.resize(count, dim);
  const std::size_t n = static_cast<std::size_t>(count) * dim;
  if constexpr (std::endian::native == std::endian::little) {
    r.read(reinterpret_cast<char*>(ix.descriptors.data()), n * sizeof(float), "descriptor block");
  } else {
    for (std::size_t k = 0; k < n; ++k) ix.descriptors.data()[k] = r.get<float>("descriptor block");
  }
  return ix;
}

void save_index(const Index& ix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  write_index(ix, out);
  out.close();
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

Index load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  try {
    return read_index(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

namespace {

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_metadata_csv(const Index& ix, std::ostream& out) {
  out << "id,path,label,magnification\n";
  for (const auto& rec : ix.records) {
    out << rec.id << ',' << csv_quote(rec.path.generic_string()) << ',' << to_string(rec.label) << ','
        << static_cast<int>(rec.magnification) << '\n';
  }
}

IndexStats stats(const Index& ix) {
  IndexStats s;
  s.total = ix.size();
  s.resolution = ix.spec.resolution;
  s.dim = ix.dim();
  s.resize = ix.resize;
  for (const auto& rec : ix.records) {
    ++s.labels[std::string(to_string(rec.label))];
    ++s.magnifications[to_string(rec.magnification)];
  }
  return s;
}

}  // namespace thir
