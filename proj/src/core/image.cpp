#include "glyphdiff/core/image.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "glyphdiff/core/error.hpp"

namespace gd {

namespace {

void put_u32(std::vector<unsigned char>& out, uint32_t v) {
  out.push_back((v >> 24) & 0xff);
  out.push_back((v >> 16) & 0xff);
  out.push_back((v >> 8) & 0xff);
  out.push_back(v & 0xff);
}

uint32_t get_u32(const unsigned char* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

void put_chunk(std::vector<unsigned char>& out, const char* type,
               const std::vector<unsigned char>& data) {
  put_u32(out, uint32_t(data.size()));
  size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  uint32_t crc = uint32_t(crc32(0, out.data() + start, uInt(out.size() - start)));
  put_u32(out, crc);
}

unsigned char to_byte(float v) {
  float px = (v + 1.0f) * 127.5f;
  int i = int(std::lround(px));
  return (unsigned char)(i < 0 ? 0 : (i > 255 ? 255 : i));
}

int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

}  // namespace

void save_png(const std::string& path, const Image& img) {
  check(img.ndim() == 3 && (img.dim(0) == 1 || img.dim(0) == 3), "bad_shape",
        "save_png expects [1|3,H,W]");
  int c = img.dim(0), h = img.dim(1), w = img.dim(2);
  int bpp = c;

  // raw scanlines: filter byte 0 + pixels
  std::vector<unsigned char> raw(size_t(h) * (size_t(w) * bpp + 1));
  for (int y = 0; y < h; ++y) {
    unsigned char* row = raw.data() + size_t(y) * (size_t(w) * bpp + 1);
    row[0] = 0;
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch)
        row[1 + x * bpp + ch] = to_byte(img.data()[(ch * h + y) * w + x]);
  }

  uLongf comp_bound = compressBound(uLong(raw.size()));
  std::vector<unsigned char> comp(comp_bound);
  check(compress2(comp.data(), &comp_bound, raw.data(), uLong(raw.size()), 6) == Z_OK,
        "io_error", "png deflate failed");
  comp.resize(comp_bound);

  std::vector<unsigned char> out = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  std::vector<unsigned char> ihdr;
  put_u32(ihdr, uint32_t(w));
  put_u32(ihdr, uint32_t(h));
  ihdr.push_back(8);                        // bit depth
  ihdr.push_back(c == 3 ? 2 : 0);           // color type
  ihdr.push_back(0);                        // compression
  ihdr.push_back(0);                        // filter
  ihdr.push_back(0);                        // interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", comp);
  put_chunk(out, "IEND", {});

  std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    check(os.good(), "io_error", "cannot open " + tmp);
    os.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
    check(os.good(), "io_error", "write failed for " + tmp);
  }
  check(std::rename(tmp.c_str(), path.c_str()) == 0, "io_error", "rename failed for " + path);
}

Image load_png(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  check(is.good(), "io_error", "cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)),
                                 std::istreambuf_iterator<char>());
  check(buf.size() > 8 && buf[1] == 'P' && buf[2] == 'N' && buf[3] == 'G', "io_error",
        "not a PNG: " + path);

  size_t pos = 8;
  int w = 0, h = 0, color = -1, depth = 0;
  std::vector<unsigned char> idat;
  while (pos + 8 <= buf.size()) {
    uint32_t len = get_u32(buf.data() + pos);
    std::string type(reinterpret_cast<const char*>(buf.data() + pos + 4), 4);
    const unsigned char* data = buf.data() + pos + 8;
    check(pos + 12 + len <= buf.size(), "io_error", "truncated PNG: " + path);
    if (type == "IHDR") {
      w = int(get_u32(data));
      h = int(get_u32(data + 4));
      depth = data[8];
      color = data[9];
      check(depth == 8 && (color == 0 || color == 2), "io_error",
            "unsupported PNG format (need 8-bit gray or RGB): " + path);
      check(data[12] == 0, "io_error", "interlaced PNG unsupported: " + path);
    } else if (type == "IDAT") {
      idat.insert(idat.end(), data, data + len);
    } else if (type == "IEND") {
      break;
    }
    pos += 12 + len;
  }
  check(w > 0 && h > 0 && !idat.empty(), "io_error", "malformed PNG: " + path);

  int bpp = (color == 2) ? 3 : 1;
  size_t stride = size_t(w) * bpp;
  std::vector<unsigned char> raw(size_t(h) * (stride + 1));
  uLongf raw_len = uLongf(raw.size());
  check(uncompress(raw.data(), &raw_len, idat.data(), uLong(idat.size())) == Z_OK &&
            raw_len == raw.size(),
        "io_error", "png inflate failed: " + path);

  // undo scanline filters in place
  std::vector<unsigned char> prev(stride, 0);
  Image img({bpp, h, w});
  for (int y = 0; y < h; ++y) {
    unsigned char* row = raw.data() + size_t(y) * (stride + 1);
    int filter = row[0];
    unsigned char* px = row + 1;
    for (size_t i = 0; i < stride; ++i) {
      int a = (i >= size_t(bpp)) ? px[i - bpp] : 0;
      int b = prev[i];
      int cc = (i >= size_t(bpp)) ? prev[i - bpp] : 0;
      int v = px[i];
      switch (filter) {
        case 0: break;
        case 1: v += a; break;
        case 2: v += b; break;
        case 3: v += (a + b) / 2; break;
        case 4: v += paeth(a, b, cc); break;
        default: check(false, "io_error", "bad PNG filter: " + path);
      }
      px[i] = (unsigned char)(v & 0xff);
    }
    std::memcpy(prev.data(), px, stride);
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < bpp; ++ch)
        img.data()[(ch * h + y) * w + x] = float(px[x * bpp + ch]) / 127.5f - 1.0f;
  }
  return img;
}

Image affine_sample_image(const Image& src, const std::array<float, 6>& m, int out_h,
                          int out_w) {
  int c = src.dim(0), h = src.dim(1), w = src.dim(2);
  Image out({c, out_h, out_w});
  for (int i = 0; i < out_h; ++i)
    for (int j = 0; j < out_w; ++j) {
      float sx = m[0] * (j + 0.5f) + m[1] * (i + 0.5f) + m[2] - 0.5f;
      float sy = m[3] * (j + 0.5f) + m[4] * (i + 0.5f) + m[5] - 0.5f;
      int x0 = int(std::floor(sx)), y0 = int(std::floor(sy));
      float fx = sx - x0, fy = sy - y0;
      for (int ch = 0; ch < c; ++ch) {
        float acc = 0.0f;
        auto tap = [&](int xx, int yy, float wt) {
          if (xx < 0 || xx >= w || yy < 0 || yy >= h) return;
          acc += wt * src.data()[(ch * h + yy) * w + xx];
        };
        tap(x0, y0, (1 - fx) * (1 - fy));
        tap(x0 + 1, y0, fx * (1 - fy));
        tap(x0, y0 + 1, (1 - fx) * fy);
        tap(x0 + 1, y0 + 1, fx * fy);
        out.data()[(ch * out_h + i) * out_w + j] = acc;
      }
    }
  return out;
}

Image resize_bilinear(const Image& src, int out_h, int out_w) {
  std::array<float, 6> m = {float(src.dim(2)) / float(out_w), 0.0f, 0.0f,
                            0.0f, float(src.dim(1)) / float(out_h), 0.0f};
  return affine_sample_image(src, m, out_h, out_w);
}

float psnr(const Image& a, const Image& b, float peak) {
  check(a.shape() == b.shape(), "shape_mismatch", "psnr");
  double m = (a.array().template cast<double>() - b.array().template cast<double>())
                 .square()
                 .mean();
  if (m <= 0) return 99.0f;
  return float(10.0 * std::log10(double(peak) * double(peak) / m));
}

}  // namespace gd
