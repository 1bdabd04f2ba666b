#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sosnet {

// 8-bit image, row-major, interleaved when channels == 3.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;  // 1 (gray) or 3 (rgb)
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

struct LesionAnnotation {
    std::string image_path;
    double cx = 0.0;
    double cy = 0.0;
    double r = 0.0;
    int label = 0;
};

struct DatasetManifest {
    std::vector<std::string> classes;
    std::vector<LesionAnnotation> train;
    std::vector<LesionAnnotation> test;
};

class ImageIoError : public std::runtime_error {
public:
    enum class Code {
        OpenFailed,
        UnknownMagic,
        MalformedHeader,
        BadMaxval,
        TruncatedPayload,
        UnsupportedChannels,
        WriteFailed,
    };

    ImageIoError(Code code, std::size_t byte_offset, const std::string& msg)
        : std::runtime_error(msg), code(code), byte_offset(byte_offset) {}

    Code code;
    std::size_t byte_offset;
};

class AnnotationError : public std::runtime_error {
public:
    AnnotationError(std::size_t line, const std::string& msg)
        : std::runtime_error(msg), line(line) {}
    std::size_t line;  // 1-based
};

// Binary PPM (P6, 3 channel) / PGM (P5, 1 channel), maxval 255 only.
Image read_image(const std::string& path);
void write_image(const Image& img, const std::string& path);

// Decode/encode against in-memory bytes; read_image/write_image wrap these.
Image decode_netpbm(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_netpbm(const Image& img);

// JSON Lines, one {"image","cx","cy","r","label"} object per non-blank line.
// String labels are resolved against `classes`; pass an empty list to
// require integer labels.
std::vector<LesionAnnotation> read_annotations(const std::string& path,
                                               const std::vector<std::string>& classes = {});

DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& m, const std::string& path);

struct LoadedSample {
    Image image;
    LesionAnnotation annotation;
};

// Reads every referenced image (relative paths resolved against data_dir)
// and checks the annotation centroid against the actual image bounds.
std::vector<LoadedSample> load_split(const std::vector<LesionAnnotation>& annotations,
                                     const std::string& data_dir);

}  // namespace sosnet
