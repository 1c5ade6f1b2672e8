#include "glyphdiff/core/serialize.hpp"

#include <cstdio>
#include <fstream>

namespace gd {

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_hex(const std::string& s) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)fnv1a64(s));
  return std::string(buf);
}

const Tensor<float>* Checkpoint::find(const std::string& name) const {
  auto it = tensors_.find(name);
  return it == tensors_.end() ? nullptr : &it->second;
}

void Checkpoint::put_store(const std::string& prefix, const ParamStore<float>& ps) {
  for (const Param<float>* p : ps.all()) tensors_[prefix + p->name] = p->value;
}

void Checkpoint::load_store(const std::string& prefix, ParamStore<float>& ps) const {
  for (Param<float>* p : ps.all()) {
    const Tensor<float>* t = find(prefix + p->name);
    check(t != nullptr, "missing_tensor", "checkpoint lacks " + prefix + p->name);
    check(t->shape() == p->value.shape(), "shape_mismatch",
          "checkpoint tensor shape for " + prefix + p->name);
    p->value = *t;
  }
}

namespace {

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

constexpr uint32_t kMagic = 0x4b434447;  // "GDCK"

}  // namespace

void Checkpoint::save(const std::string& path) const {
  std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    check(os.good(), "io_error", "cannot open " + tmp + " for writing");
    write_pod(os, kMagic);
    write_pod(os, uint32_t(1));
    std::string header = meta.dump();
    write_pod(os, uint32_t(header.size()));
    os.write(header.data(), std::streamsize(header.size()));
    write_pod(os, uint32_t(tensors_.size()));
    for (const auto& [name, t] : tensors_) {
      write_pod(os, uint32_t(name.size()));
      os.write(name.data(), std::streamsize(name.size()));
      write_pod(os, uint32_t(t.ndim()));
      for (int i = 0; i < t.ndim(); ++i) write_pod(os, int32_t(t.dim(i)));
      os.write(reinterpret_cast<const char*>(t.data()),
               std::streamsize(sizeof(float) * size_t(t.numel())));
    }
    check(os.good(), "io_error", "write failed for " + tmp);
  }
  check(std::rename(tmp.c_str(), path.c_str()) == 0, "io_error", "rename failed for " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  check(is.good(), "unreadable_checkpoint", "cannot open " + path);
  Checkpoint ck;
  check(read_pod<uint32_t>(is) == kMagic, "unreadable_checkpoint", "bad magic in " + path);
  check(read_pod<uint32_t>(is) == 1, "unreadable_checkpoint", "unsupported version in " + path);
  uint32_t hlen = read_pod<uint32_t>(is);
  std::string header(hlen, '\0');
  is.read(header.data(), hlen);
  ck.meta = nlohmann::json::parse(header);
  uint32_t n = read_pod<uint32_t>(is);
  for (uint32_t i = 0; i < n; ++i) {
    uint32_t nlen = read_pod<uint32_t>(is);
    std::string name(nlen, '\0');
    is.read(name.data(), nlen);
    uint32_t nd = read_pod<uint32_t>(is);
    std::vector<int> shape;
    for (uint32_t d = 0; d < nd; ++d) shape.push_back(read_pod<int32_t>(is));
    Tensor<float> t(shape);
    is.read(reinterpret_cast<char*>(t.data()), std::streamsize(sizeof(float) * size_t(t.numel())));
    check(is.good(), "unreadable_checkpoint", "truncated tensor " + name + " in " + path);
    ck.tensors_[name] = std::move(t);
  }
  return ck;
}

}  // namespace gd
