#include "gfrs/io.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gfrs {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open file for writing");
    return out;
}

std::string fmt(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

} // namespace

PointCloud read_xyz(const std::string& path) {
    const std::string text = read_file(path);
    PointCloud cloud;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream fields(line);
        Eigen::Vector3d p;
        std::string extra;
        if (!(fields >> p.x() >> p.y() >> p.z()))
            throw ParseError(path + ": parse error at line " + std::to_string(lineno) +
                             ": expected three reals");
        if (fields >> extra)
            throw ParseError(path + ": parse error at line " + std::to_string(lineno) +
                             ": trailing fields");
        cloud.points.push_back(p);
    }
    if (cloud.points.empty()) throw ParseError(path + ": no points");
    return cloud;
}

void write_xyz(const std::string& path, const PointCloud& cloud) {
    std::ofstream out = open_out(path);
    for (const auto& p : cloud.points)
        out << fmt(p.x(), 9) << " " << fmt(p.y(), 9) << " " << fmt(p.z(), 9) << "\n";
    if (!out) throw std::runtime_error(path + ": write failed");
}

namespace {

// Line-oriented cursor over a PLY file that tracks byte offsets for errors.
struct PlyCursor {
    const std::string& text;
    const std::string& path;
    std::size_t pos = 0;
    std::size_t line_start = 0;

    bool next_line(std::string& out) {
        if (pos >= text.size()) return false;
        line_start = pos;
        const auto nl = text.find('\n', pos);
        out = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() : nl + 1;
        if (!out.empty() && out.back() == '\r') out.pop_back();
        return true;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(path + ": " + msg + " at byte offset " + std::to_string(line_start));
    }
};

} // namespace

PlyContents read_ply(const std::string& path) {
    const std::string text = read_file(path);
    PlyCursor cur{text, path};
    std::string line;

    if (!cur.next_line(line) || line != "ply") cur.fail("missing 'ply' magic");

    struct Element {
        std::string name;
        long count = 0;
        std::vector<std::string> properties;
    };
    std::vector<Element> elements;
    bool format_seen = false, header_done = false;
    while (cur.next_line(line)) {
        std::istringstream f(line);
        std::string kw;
        f >> kw;
        if (kw.empty() || kw == "comment") continue;
        if (kw == "format") {
            std::string mode;
            f >> mode;
            if (mode != "ascii") cur.fail("binary PLY unsupported");
            format_seen = true;
        } else if (kw == "element") {
            Element e;
            if (!(f >> e.name >> e.count) || e.count < 0) cur.fail("malformed element line");
            elements.push_back(e);
        } else if (kw == "property") {
            if (elements.empty()) cur.fail("property before any element");
            std::string rest;
            std::getline(f, rest);
            elements.back().properties.push_back(rest);
        } else if (kw == "end_header") {
            header_done = true;
            break;
        } else {
            cur.fail("unknown header keyword '" + kw + "'");
        }
    }
    if (!header_done) cur.fail("missing end_header");
    if (!format_seen) cur.fail("missing format line");

    PlyContents out;
    long face_count = -1;
    for (const Element& e : elements) {
        if (e.name == "vertex") {
            if (e.properties.size() < 3) cur.fail("vertex element needs x, y, z properties");
            for (long i = 0; i < e.count; ++i) {
                if (!cur.next_line(line)) cur.fail("unexpected end of vertex data");
                std::istringstream f(line);
                Eigen::Vector3d p;
                if (!(f >> p.x() >> p.y() >> p.z())) cur.fail("malformed vertex line");
                out.cloud.points.push_back(p);
            }
        } else if (e.name == "face") {
            face_count = e.count;
            out.mesh.emplace();
            for (long i = 0; i < e.count; ++i) {
                if (!cur.next_line(line)) cur.fail("unexpected end of face data");
                std::istringstream f(line);
                int n = 0;
                if (!(f >> n) || n != 3) cur.fail("only triangular faces supported");
                std::array<int, 3> face{};
                if (!(f >> face[0] >> face[1] >> face[2])) cur.fail("malformed face line");
                out.mesh->faces.push_back(face);
            }
        } else {
            for (long i = 0; i < e.count; ++i)
                if (!cur.next_line(line)) cur.fail("unexpected end of element data");
        }
    }
    if (out.cloud.points.empty()) cur.fail("no vertex element");
    if (face_count >= 0) {
        out.mesh->vertices = out.cloud.points;
        try {
            out.mesh->validate();
        } catch (const std::invalid_argument& e) {
            throw ParseError(path + ": " + e.what());
        }
    }
    return out;
}

namespace {

void write_ply_header(std::ofstream& out, std::size_t vertices, std::size_t faces,
                      bool with_faces) {
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << vertices << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    if (with_faces) {
        out << "element face " << faces << "\n";
        out << "property list uchar int vertex_indices\n";
    }
    out << "end_header\n";
}

void write_vertices(std::ofstream& out, const std::vector<Eigen::Vector3d>& pts) {
    for (const auto& p : pts)
        out << fmt(p.x(), 9) << " " << fmt(p.y(), 9) << " " << fmt(p.z(), 9) << "\n";
}

} // namespace

void write_ply(const std::string& path, const PointCloud& cloud) {
    std::ofstream out = open_out(path);
    write_ply_header(out, cloud.size(), 0, false);
    write_vertices(out, cloud.points);
    if (!out) throw std::runtime_error(path + ": write failed");
}

void write_ply(const std::string& path, const TriangleMesh& mesh) {
    std::ofstream out = open_out(path);
    write_ply_header(out, mesh.vertices.size(), mesh.faces.size(), true);
    write_vertices(out, mesh.vertices);
    for (const auto& f : mesh.faces) out << "3 " << f[0] << " " << f[1] << " " << f[2] << "\n";
    if (!out) throw std::runtime_error(path + ": write failed");
}

namespace {

constexpr int kCheckpointVersion = 1;

void write_set(std::ofstream& out, const std::string& prefix, const ad::ParameterSet& set) {
    for (const auto& [name, param] : set) {
        const Eigen::MatrixXd& v = param->value;
        out << "tensor " << prefix << ":" << name << " 2 " << v.rows() << " " << v.cols() << "\n";
        for (Eigen::Index r = 0; r < v.rows(); ++r) {
            for (Eigen::Index c = 0; c < v.cols(); ++c)
                out << (c ? " " : "") << fmt(v(r, c), 17);
            out << "\n";
        }
    }
}

} // namespace

void save_checkpoint(const std::string& path, const GradientFieldModel& model) {
    std::ofstream out = open_out(path);
    out << "GFRS " << kCheckpointVersion << "\n";
    const ModelConfig& c = model.cfg;
    out << "config k_feat " << c.k_feat << "\n";
    out << "config k_max " << c.k_max << "\n";
    out << "config radius_factor " << fmt(c.radius_factor, 17) << "\n";
    out << "config fixed_radius " << fmt(c.fixed_radius, 17) << "\n";
    out << "config widths " << ModelConfig::edge_width << " " << ModelConfig::ctx_width << " "
        << ModelConfig::rel_width << " " << ModelConfig::head_hidden << "\n";
    out << "tensors " << (model.params_h.size() + model.params_f.size() + model.params_m.size())
        << "\n";
    write_set(out, "h", model.params_h);
    write_set(out, "f", model.params_f);
    write_set(out, "m", model.params_m);
    out << "end\n";
    if (!out) throw std::runtime_error(path + ": write failed");
}

GradientFieldModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");

    auto fail = [&](const std::string& msg) -> ParseError {
        return ParseError(path + ": checkpoint error: " + msg);
    };

    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "GFRS") throw fail("bad magic");
    if (version != kCheckpointVersion)
        throw fail("unknown version " + std::to_string(version));

    ModelConfig cfg;
    std::string kw;
    std::size_t tensor_count = 0;
    while (in >> kw) {
        if (kw == "config") {
            std::string name;
            in >> name;
            bool ok = true;
            if (name == "k_feat") ok = static_cast<bool>(in >> cfg.k_feat);
            else if (name == "k_max") ok = static_cast<bool>(in >> cfg.k_max);
            else if (name == "radius_factor") ok = static_cast<bool>(in >> cfg.radius_factor);
            else if (name == "fixed_radius") ok = static_cast<bool>(in >> cfg.fixed_radius);
            else if (name == "widths") {
                int w[4];
                ok = static_cast<bool>(in >> w[0] >> w[1] >> w[2] >> w[3]);
                if (ok && (w[0] != ModelConfig::edge_width || w[1] != ModelConfig::ctx_width ||
                           w[2] != ModelConfig::rel_width || w[3] != ModelConfig::head_hidden))
                    throw fail("incompatible layer widths");
            } else {
                throw fail("unknown config key '" + name + "'");
            }
            if (!ok) throw fail("malformed config line");
        } else if (kw == "tensors") {
            if (!(in >> tensor_count)) throw fail("malformed tensor count");
            break;
        } else {
            throw fail("unexpected keyword '" + kw + "'");
        }
    }

    GradientFieldModel model = GradientFieldModel::init(cfg, 0);
    std::size_t loaded = 0;
    for (std::size_t t = 0; t < tensor_count; ++t) {
        std::string tname;
        int rank = 0;
        Eigen::Index rows = 0, cols = 0;
        if (!(in >> kw >> tname >> rank >> rows >> cols) || kw != "tensor" || rank != 2)
            throw fail("malformed tensor header");
        const auto colon = tname.find(':');
        if (colon == std::string::npos) throw fail("tensor name missing set prefix: " + tname);
        const std::string set_name = tname.substr(0, colon);
        const std::string param_name = tname.substr(colon + 1);
        ad::ParameterSet* set = nullptr;
        if (set_name == "h") set = &model.params_h;
        else if (set_name == "f") set = &model.params_f;
        else if (set_name == "m") set = &model.params_m;
        else throw fail("unknown parameter set '" + set_name + "'");

        ad::Parameter* p = nullptr;
        try {
            p = &set->at(param_name);
        } catch (const std::invalid_argument&) {
            throw fail("unknown tensor '" + tname + "'");
        }
        if (p->value.rows() != rows || p->value.cols() != cols)
            throw fail("shape mismatch for tensor '" + tname + "'");
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c)
                if (!(in >> p->value(r, c))) throw fail("truncated tensor '" + tname + "'");
        ++loaded;
    }
    if (!(in >> kw) || kw != "end") throw fail("missing end marker");
    const std::size_t expected =
        model.params_h.size() + model.params_f.size() + model.params_m.size();
    if (loaded != expected) throw fail("tensor count mismatch");
    return model;
}

} // namespace gfrs
