#include <zlib.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include "core/error.hpp"
#include "data/dataset.hpp"

namespace pb::data {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<unsigned char> read_raw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                      std::istreambuf_iterator<char>());
}

std::vector<unsigned char> gunzip(const std::vector<unsigned char>& in, const std::string& path) {
    z_stream zs;
    std::memset(&zs, 0, sizeof(zs));
    // 15 window bits + 16 selects gzip framing.
    if (inflateInit2(&zs, 15 + 16) != Z_OK) throw ConfigError("zlib init failed for " + path);
    std::vector<unsigned char> out;
    out.reserve(in.size() * 4);
    unsigned char buf[1 << 16];
    zs.next_in = const_cast<unsigned char*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    int rc = Z_OK;
    do {
        zs.next_out = buf;
        zs.avail_out = sizeof(buf);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw ConfigError("corrupt gzip data in " + path);
        }
        out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
    } while (rc != Z_STREAM_END && (zs.avail_in > 0 || zs.avail_out == 0));
    inflateEnd(&zs);
    if (rc != Z_STREAM_END) throw ConfigError("truncated gzip data in " + path);
    return out;
}

std::vector<unsigned char> read_maybe_gzip(const std::string& path) {
    std::vector<unsigned char> raw = read_raw(path);
    if (raw.size() >= 2 && raw[0] == 0x1F && raw[1] == 0x8B) return gunzip(raw, path);
    return raw;
}

std::uint32_t be32(const std::vector<unsigned char>& buf, std::size_t off, const std::string& path) {
    if (off + 4 > buf.size()) throw ConfigError("truncated header in " + path);
    return (std::uint32_t(buf[off]) << 24) | (std::uint32_t(buf[off + 1]) << 16) |
           (std::uint32_t(buf[off + 2]) << 8) | std::uint32_t(buf[off + 3]);
}

void write_be32(std::vector<unsigned char>& buf, std::uint32_t v) {
    buf.push_back(static_cast<unsigned char>(v >> 24));
    buf.push_back(static_cast<unsigned char>(v >> 16));
    buf.push_back(static_cast<unsigned char>(v >> 8));
    buf.push_back(static_cast<unsigned char>(v));
}

void write_bytes(const std::string& path, const std::vector<unsigned char>& buf) {
    bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
    if (gz) {
        gzFile f = gzopen(path.c_str(), "wb");
        if (!f) throw ConfigError("cannot open file for writing: " + path);
        if (gzwrite(f, buf.data(), static_cast<unsigned>(buf.size())) !=
            static_cast<int>(buf.size())) {
            gzclose(f);
            throw ConfigError("short write to " + path);
        }
        gzclose(f);
    } else {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ConfigError("cannot open file for writing: " + path);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size()));
        if (!out) throw ConfigError("short write to " + path);
    }
}

std::string hex32(std::uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "0x%08X", v);
    return buf;
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::vector<unsigned char> img = read_maybe_gzip(images_path);
    std::vector<unsigned char> lab = read_maybe_gzip(labels_path);

    std::uint32_t img_magic = be32(img, 0, images_path);
    if (img_magic != kImagesMagic)
        throw ConfigError("bad magic in " + images_path + ": got " + hex32(img_magic) +
                          ", want " + hex32(kImagesMagic));
    std::uint32_t n_img = be32(img, 4, images_path);
    std::uint32_t rows = be32(img, 8, images_path);
    std::uint32_t cols = be32(img, 12, images_path);
    std::size_t need = 16 + std::size_t(n_img) * rows * cols;
    if (img.size() < need)
        throw ConfigError("truncated image data in " + images_path + ": have " +
                          std::to_string(img.size()) + " bytes, need " + std::to_string(need));

    std::uint32_t lab_magic = be32(lab, 0, labels_path);
    if (lab_magic != kLabelsMagic)
        throw ConfigError("bad magic in " + labels_path + ": got " + hex32(lab_magic) +
                          ", want " + hex32(kLabelsMagic));
    std::uint32_t n_lab = be32(lab, 4, labels_path);
    if (n_lab != n_img)
        throw ConfigError("count mismatch: " + images_path + " has " + std::to_string(n_img) +
                          " images but " + labels_path + " has " + std::to_string(n_lab) +
                          " labels");
    if (lab.size() < 8 + std::size_t(n_lab))
        throw ConfigError("truncated label data in " + labels_path);

    Dataset ds;
    ds.feature_dim = static_cast<int>(rows * cols);
    ds.name = "idx";
    ds.samples.resize(n_img);
    int max_label = -1;
    const std::size_t d = rows * std::size_t(cols);
    for (std::uint32_t i = 0; i < n_img; ++i) {
        Sample& s = ds.samples[i];
        s.feature.resize(d);
        const unsigned char* px = img.data() + 16 + std::size_t(i) * d;
        for (std::size_t j = 0; j < d; ++j) s.feature[j] = px[j] / 255.0;
        s.label = lab[8 + i];
        if (s.label > max_label) max_label = s.label;
    }
    ds.num_classes = max_label + 1;
    return ds;
}

void save_idx(const Dataset& ds, int rows, int cols, const std::string& images_path,
              const std::string& labels_path) {
    if (rows * cols != ds.feature_dim)
        throw ConfigError("save_idx: rows*cols != feature_dim");
    std::vector<unsigned char> img;
    img.reserve(16 + ds.samples.size() * std::size_t(ds.feature_dim));
    write_be32(img, kImagesMagic);
    write_be32(img, static_cast<std::uint32_t>(ds.samples.size()));
    write_be32(img, static_cast<std::uint32_t>(rows));
    write_be32(img, static_cast<std::uint32_t>(cols));
    std::vector<unsigned char> lab;
    lab.reserve(8 + ds.samples.size());
    write_be32(lab, kLabelsMagic);
    write_be32(lab, static_cast<std::uint32_t>(ds.samples.size()));
    for (const Sample& s : ds.samples) {
        for (double v : s.feature) {
            double q = v * 255.0 + 0.5;
            if (q < 0.0) q = 0.0;
            if (q > 255.0) q = 255.0;
            img.push_back(static_cast<unsigned char>(q));
        }
        lab.push_back(static_cast<unsigned char>(s.label));
    }
    write_bytes(images_path, img);
    write_bytes(labels_path, lab);
}

}  // namespace pb::data
