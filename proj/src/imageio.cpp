#include "sosnet/imageio.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace sosnet {

namespace {

bool is_pnm_space(int c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// Cursor over the raw file bytes so errors can name the offending offset.
struct ByteCursor {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;
    std::size_t last_token_start = 0;

    bool eof() const { return pos >= bytes.size(); }
    int peek() const { return eof() ? -1 : bytes[pos]; }
    int get() { return eof() ? -1 : bytes[pos++]; }

    void skip_space_and_comments() {
        for (;;) {
            while (!eof() && is_pnm_space(peek())) ++pos;
            if (!eof() && peek() == '#') {
                while (!eof() && peek() != '\n') ++pos;
                continue;
            }
            return;
        }
    }

    // Unsigned decimal token.
    long parse_uint(const char* field) {
        skip_space_and_comments();
        std::size_t start = pos;
        last_token_start = pos;
        long v = 0;
        bool any = false;
        while (!eof() && peek() >= '0' && peek() <= '9') {
            v = v * 10 + (get() - '0');
            any = true;
            if (v > 1000000000L)
                throw ImageIoError(ImageIoError::Code::MalformedHeader, start,
                                   std::string("netpbm header: ") + field + " out of range at byte offset " +
                                       std::to_string(start));
        }
        if (!any)
            throw ImageIoError(ImageIoError::Code::MalformedHeader, start,
                               std::string("netpbm header: expected ") + field + " at byte offset " +
                                   std::to_string(start));
        return v;
    }
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ImageIoError(ImageIoError::Code::OpenFailed, 0, "cannot open image file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

}  // namespace

Image decode_netpbm(const std::vector<std::uint8_t>& bytes) {
    ByteCursor cur{bytes};
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw ImageIoError(ImageIoError::Code::UnknownMagic, 0,
                           "unknown netpbm magic at byte offset 0 (want P5 or P6)");
    int channels = (bytes[1] == '6') ? 3 : 1;
    cur.pos = 2;

    long w = cur.parse_uint("width");
    long h = cur.parse_uint("height");
    if (w < 1 || h < 1)
        throw ImageIoError(ImageIoError::Code::MalformedHeader, cur.pos,
                           "netpbm header: width/height must be >= 1 (got " + std::to_string(w) + "x" +
                               std::to_string(h) + ") before byte offset " + std::to_string(cur.pos));
    long maxval = cur.parse_uint("maxval");
    std::size_t maxval_at = cur.last_token_start;
    if (maxval != 255)
        throw ImageIoError(ImageIoError::Code::BadMaxval, maxval_at,
                           "netpbm maxval must be 255, got " + std::to_string(maxval) +
                               " near byte offset " + std::to_string(maxval_at));

    // Exactly one whitespace byte separates the header from the payload.
    if (cur.eof() || !is_pnm_space(cur.peek()))
        throw ImageIoError(ImageIoError::Code::MalformedHeader, cur.pos,
                           "netpbm header: expected single whitespace before payload at byte offset " +
                               std::to_string(cur.pos));
    cur.get();

    std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels;
    if (bytes.size() - cur.pos < need)
        throw ImageIoError(ImageIoError::Code::TruncatedPayload, bytes.size(),
                           "netpbm payload truncated: need " + std::to_string(need) + " bytes, file ends at byte offset " +
                               std::to_string(bytes.size()) + " (payload starts at " + std::to_string(cur.pos) + ")");

    Image img;
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.channels = channels;
    img.pixels.assign(bytes.begin() + cur.pos, bytes.begin() + cur.pos + need);
    return img;
}

std::vector<std::uint8_t> encode_netpbm(const Image& img) {
    if (img.channels != 1 && img.channels != 3)
        throw ImageIoError(ImageIoError::Code::UnsupportedChannels, 0,
                           "unsupported channel count " + std::to_string(img.channels) + " (want 1 or 3)");
    if (img.width < 1 || img.height < 1)
        throw ImageIoError(ImageIoError::Code::MalformedHeader, 0, "image dimensions must be >= 1");
    std::size_t need = static_cast<std::size_t>(img.width) * img.height * img.channels;
    if (img.pixels.size() != need)
        throw ImageIoError(ImageIoError::Code::TruncatedPayload, 0,
                           "pixel buffer has " + std::to_string(img.pixels.size()) + " bytes, expected " +
                               std::to_string(need));

    std::string header = (img.channels == 3 ? "P6\n" : "P5\n") + std::to_string(img.width) + " " +
                         std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

Image read_image(const std::string& path) { return decode_netpbm(read_file_bytes(path)); }

void write_image(const Image& img, const std::string& path) {
    std::vector<std::uint8_t> bytes = encode_netpbm(img);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ImageIoError(ImageIoError::Code::WriteFailed, 0, "cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw ImageIoError(ImageIoError::Code::WriteFailed, 0, "write failed: " + path);
}

namespace {

LesionAnnotation annotation_from_json(const nlohmann::json& obj, std::size_t line,
                                      const std::vector<std::string>& classes) {
    for (const char* key : {"image", "cx", "cy", "r", "label"})
        if (!obj.contains(key))
            throw AnnotationError(line, "annotation line " + std::to_string(line) + ": missing key \"" + key + "\"");

    LesionAnnotation a;
    a.image_path = obj.at("image").get<std::string>();
    a.cx = obj.at("cx").get<double>();
    a.cy = obj.at("cy").get<double>();
    a.r = obj.at("r").get<double>();
    if (!(a.r > 0.0))
        throw AnnotationError(line, "annotation line " + std::to_string(line) + ": r must be > 0, got " +
                                        std::to_string(a.r));

    const auto& lab = obj.at("label");
    if (lab.is_string()) {
        const std::string name = lab.get<std::string>();
        int idx = -1;
        for (std::size_t i = 0; i < classes.size(); ++i)
            if (classes[i] == name) idx = static_cast<int>(i);
        if (idx < 0)
            throw AnnotationError(line, "annotation line " + std::to_string(line) + ": unknown class name \"" +
                                            name + "\"");
        a.label = idx;
    } else if (lab.is_number_integer()) {
        a.label = lab.get<int>();
        if (a.label < 0)
            throw AnnotationError(line, "annotation line " + std::to_string(line) + ": negative label");
        if (!classes.empty() && a.label >= static_cast<int>(classes.size()))
            throw AnnotationError(line, "annotation line " + std::to_string(line) + ": label " +
                                            std::to_string(a.label) + " out of range for " +
                                            std::to_string(classes.size()) + " classes");
    } else {
        throw AnnotationError(line, "annotation line " + std::to_string(line) + ": label must be int or string");
    }
    return a;
}

}  // namespace

std::vector<LesionAnnotation> read_annotations(const std::string& path,
                                               const std::vector<std::string>& classes) {
    std::ifstream in(path);
    if (!in) throw AnnotationError(0, "cannot open annotation file: " + path);

    std::vector<LesionAnnotation> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t nonblank = line.find_first_not_of(" \t\r");
        if (nonblank == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw AnnotationError(lineno,
                                  "annotation line " + std::to_string(lineno) + ": JSON parse error: " + e.what());
        }
        out.push_back(annotation_from_json(obj, lineno, classes));
    }
    return out;
}

namespace {

std::vector<LesionAnnotation> split_from_json(const nlohmann::json& arr, const std::vector<std::string>& classes,
                                              const char* split_name) {
    if (!arr.is_array()) throw std::runtime_error(std::string("manifest: \"") + split_name + "\" must be an array");
    std::vector<LesionAnnotation> out;
    std::set<std::string> seen;
    std::size_t i = 0;
    for (const auto& obj : arr) {
        ++i;
        LesionAnnotation a = annotation_from_json(obj, i, classes);
        if (!seen.insert(a.image_path).second)
            throw std::runtime_error(std::string("manifest: duplicate image_path \"") + a.image_path + "\" in " +
                                     split_name + " split");
        out.push_back(std::move(a));
    }
    return out;
}

nlohmann::json split_to_json(const std::vector<LesionAnnotation>& split) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& a : split) {
        arr.push_back({{"image", a.image_path}, {"cx", a.cx}, {"cy", a.cy}, {"r", a.r}, {"label", a.label}});
    }
    return arr;
}

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("manifest parse error in " + path + ": " + e.what());
    }
    DatasetManifest m;
    if (!doc.contains("classes") || !doc["classes"].is_array())
        throw std::runtime_error("manifest: missing \"classes\" array");
    for (const auto& c : doc["classes"]) m.classes.push_back(c.get<std::string>());
    if (m.classes.empty()) throw std::runtime_error("manifest: empty class list");
    m.train = split_from_json(doc.value("train", nlohmann::json::array()), m.classes, "train");
    m.test = split_from_json(doc.value("test", nlohmann::json::array()), m.classes, "test");
    return m;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
    nlohmann::json doc;
    doc["classes"] = m.classes;
    doc["train"] = split_to_json(m.train);
    doc["test"] = split_to_json(m.test);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open manifest for writing: " + path);
    out << doc.dump(1, '\t') << "\n";
}

std::vector<LoadedSample> load_split(const std::vector<LesionAnnotation>& annotations,
                                     const std::string& data_dir) {
    std::vector<LoadedSample> out;
    out.reserve(annotations.size());
    for (const LesionAnnotation& ann : annotations) {
        std::string path = ann.image_path;
        if (!path.empty() && path[0] != '/' && !data_dir.empty()) path = data_dir + "/" + path;
        LoadedSample s;
        s.image = read_image(path);
        s.annotation = ann;
        if (!(ann.cx >= 0.0 && ann.cx < s.image.width && ann.cy >= 0.0 && ann.cy < s.image.height))
            throw std::runtime_error("annotation centroid (" + std::to_string(ann.cx) + "," +
                                     std::to_string(ann.cy) + ") outside image " + path);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace sosnet
