#include "stylip/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "stylip/errors.hpp"

namespace stylip {
namespace {

constexpr std::string_view kMagic = "STYLIP1";

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

void put_double(std::string& out, double v) { put(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  double get_double() { return std::bit_cast<double>(get<std::uint64_t>()); }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error("container: truncated input");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor& Container::find(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t.value;
  }
  throw LookupError("container has no tensor named '" + std::string(name) + "'");
}

std::string encode_container(const Container& c) {
  std::string out(kMagic);
  put(out, static_cast<std::uint32_t>(c.kind));
  put(out, static_cast<std::uint64_t>(c.config.size()));
  out += c.config;
  put(out, static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto& t : c.tensors) {
    put(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put(out, static_cast<std::uint32_t>(t.value.rank()));
    for (auto d : t.value.shape()) put(out, static_cast<std::uint64_t>(d));
    for (double v : t.value.data()) put_double(out, v);
  }
  return out;
}

Container decode_container(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(kMagic.size()) != kMagic) throw Error("container: bad magic");
  Container c;
  c.kind = static_cast<ContainerKind>(r.get<std::uint32_t>());
  c.config = std::string(r.take(r.get<std::uint64_t>()));
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor t;
    t.name = std::string(r.take(r.get<std::uint32_t>()));
    Shape shape(r.get<std::uint32_t>());
    for (auto& d : shape) d = r.get<std::uint64_t>();
    std::vector<double> data(shape_numel(shape));
    for (double& v : data) v = r.get_double();
    t.value = Tensor(std::move(shape), std::move(data));
    c.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw Error("container: trailing bytes");
  return c;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + tmp.string() + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace stylip
