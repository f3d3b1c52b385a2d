#include "topic/graph_io.hpp"

#include "topic/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace topic {

namespace {

void write_vector(std::ostream& out, const char* tag, const Vector& v) {
    out << tag << ' ' << v.size();
    char buf[40];
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        std::snprintf(buf, sizeof(buf), " %.17g", v(i));
        out << buf;
    }
    out << '\n';
}

[[noreturn]] void malformed(const std::string& what) {
    throw InputError("ngtxt: malformed graph file: " + what);
}

void expect(std::istream& in, const std::string& word) {
    std::string got;
    if (!(in >> got) || got != word) malformed("expected '" + word + "', got '" + got + "'");
}

Vector read_vector(std::istream& in, const std::string& tag) {
    expect(in, tag);
    Eigen::Index count = 0;
    if (!(in >> count) || count < 0) malformed("bad length for " + tag);
    Vector v(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        if (!(in >> v(i))) malformed("short vector for " + tag);
    }
    return v;
}

}  // namespace

void save_graph(const NGGraph& graph, std::ostream& out) {
    out << "ngtxt " << kGraphFormatVersion << '\n';
    out << "lifetime " << graph.lifetime() << '\n';
    out << "nodes " << graph.size() << '\n';
    for (std::size_t j = 0; j < graph.size(); ++j) {
        const NGNode& node = graph.node(j);
        out << "node " << j << " label " << node.label << " session " << node.origin_session << '\n';
        write_vector(out, "m", node.centroid);
        write_vector(out, "var", node.variance);
        write_vector(out, "z", node.pseudo_input);
    }
    out << "edges " << graph.edge_count() << '\n';
    for (std::size_t i = 0; i < graph.size(); ++i) {
        for (std::size_t j = i + 1; j < graph.size(); ++j) {
            if (graph.connected(i, j)) out << i << ' ' << j << ' ' << graph.age(i, j) << '\n';
        }
    }
}

NGGraph load_graph(std::istream& in) {
    expect(in, "ngtxt");
    int version = 0;
    if (!(in >> version) || version != kGraphFormatVersion) {
        malformed("unsupported version " + std::to_string(version));
    }
    expect(in, "lifetime");
    std::uint32_t lifetime = 0;
    if (!(in >> lifetime) || lifetime == 0) malformed("bad lifetime");
    expect(in, "nodes");
    std::size_t count = 0;
    if (!(in >> count)) malformed("bad node count");

    NGGraph graph(lifetime);
    for (std::size_t j = 0; j < count; ++j) {
        expect(in, "node");
        std::size_t index = 0;
        if (!(in >> index) || index != j) malformed("node indices out of order");
        NGNode node;
        expect(in, "label");
        if (!(in >> node.label)) malformed("bad label");
        expect(in, "session");
        if (!(in >> node.origin_session)) malformed("bad session");
        node.centroid = read_vector(in, "m");
        node.variance = read_vector(in, "var");
        node.pseudo_input = read_vector(in, "z");
        graph.add_node(std::move(node));
    }
    expect(in, "edges");
    std::size_t edges = 0;
    if (!(in >> edges)) malformed("bad edge count");
    for (std::size_t e = 0; e < edges; ++e) {
        std::size_t i = 0, j = 0;
        std::uint32_t age = 0;
        if (!(in >> i >> j >> age)) malformed("short edge list");
        if (i >= count || j >= count || i == j) malformed("edge endpoint out of range");
        if (age == 0 || age > lifetime) malformed("edge age out of range");
        graph.connect(i, j, age);
    }
    return graph;
}

void save_graph(const NGGraph& graph, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open " + path.string() + " for writing");
    save_graph(graph, out);
}

NGGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    return load_graph(in);
}

}  // namespace topic
