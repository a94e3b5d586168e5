#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace hga {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using NodeId = int32_t;

struct Edge {
    NodeId src;
    int rel;
    NodeId dst;
};

enum class Split { Train, Val, Test };

// Typed graph with class labels on one target node type. Node ids are dense
// integers assigned at load time; the original string id is kept for reporting.
// Immutable after finalize(); all reads are safe from concurrent workers.
struct HeteroGraph {
    std::vector<std::string> node_names;
    std::vector<int> node_type; // index into type_names
    std::vector<std::string> type_names;
    std::vector<int> labels; // -1 = unlabeled
    std::string target_type;
    int target_type_id = -1;
    int num_classes = 0;
    std::vector<std::string> relations; // sorted ascending
    std::vector<Edge> edges;
    // adj[rel][node]: sorted unique undirected neighbors, self-loops excluded
    std::vector<std::vector<std::vector<NodeId>>> adj;

    NodeId num_nodes() const { return static_cast<NodeId>(node_names.size()); }
    size_t num_relations() const { return relations.size(); }
    bool is_labeled(NodeId v) const { return labels[v] >= 0; }

    const std::vector<NodeId>& neighborhood(NodeId v, int rel) const {
        if (v < 0 || v >= num_nodes()) throw InvalidInput("unknown node id " + std::to_string(v));
        if (rel < 0 || static_cast<size_t>(rel) >= relations.size())
            throw InvalidInput("unknown relation index " + std::to_string(rel));
        return adj[rel][v];
    }

    int relation_index(const std::string& name) const {
        auto it = std::lower_bound(relations.begin(), relations.end(), name);
        if (it == relations.end() || *it != name) throw InvalidInput("unknown relation: " + name);
        return static_cast<int>(it - relations.begin());
    }

    void finalize() {
        adj.assign(relations.size(), std::vector<std::vector<NodeId>>(node_names.size()));
        for (const Edge& e : edges) {
            if (e.src == e.dst) continue;
            adj[e.rel][e.src].push_back(e.dst);
            adj[e.rel][e.dst].push_back(e.src);
        }
        for (auto& per_rel : adj) {
            for (auto& nbrs : per_rel) {
                std::sort(nbrs.begin(), nbrs.end());
                nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
            }
        }
    }
};

// Untyped simple undirected view: same node set, union of all relations,
// self-loops dropped, multiplicities collapsed.
struct HomoProjection {
    std::vector<std::vector<NodeId>> adj; // sorted unique, no self-loops
    size_t edge_count = 0;

    NodeId num_nodes() const { return static_cast<NodeId>(adj.size()); }

    const std::vector<NodeId>& neighborhood(NodeId v) const {
        if (v < 0 || v >= num_nodes()) throw InvalidInput("unknown node id " + std::to_string(v));
        return adj[v];
    }
};

inline HomoProjection project_homogeneous(const HeteroGraph& g) {
    HomoProjection proj;
    proj.adj.resize(g.node_names.size());
    for (const Edge& e : g.edges) {
        if (e.src == e.dst) continue;
        proj.adj[e.src].push_back(e.dst);
        proj.adj[e.dst].push_back(e.src);
    }
    for (auto& nbrs : proj.adj) {
        std::sort(nbrs.begin(), nbrs.end());
        nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
        proj.edge_count += nbrs.size();
    }
    proj.edge_count /= 2;
    return proj;
}

namespace detail {

inline std::vector<std::string> split_tsv(const std::string& line) {
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
        size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r')
        fields.back().pop_back();
    return fields;
}

inline bool skip_line(const std::string& line) {
    return line.empty() || line[0] == '#';
}

inline long parse_int(const std::string& s, const std::string& where) {
    try {
        size_t pos = 0;
        long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError("malformed integer '" + s + "', " + where);
    }
}

} // namespace detail

// nodes.tsv: node_id<TAB>node_type<TAB>label  (label integer or '-')
// edges.tsv: src_id<TAB>relation<TAB>dst_id
// '#'-prefixed comment lines ignored. target_type/num_classes inferred when
// left empty/zero.
inline HeteroGraph load_graph(const std::string& nodes_path,
                              const std::string& edges_path,
                              const std::string& target_type = "",
                              int num_classes = 0) {
    HeteroGraph g;
    g.target_type = target_type;
    std::unordered_map<std::string, NodeId> id_of;
    std::unordered_map<std::string, int> type_of;

    std::ifstream nodes_in(nodes_path);
    if (!nodes_in) throw ParseError("cannot open " + nodes_path);
    std::string line;
    int max_label = -1;
    long line_no = 0;
    while (std::getline(nodes_in, line)) {
        ++line_no;
        if (detail::skip_line(line)) continue;
        auto where = nodes_path + ":" + std::to_string(line_no);
        auto fields = detail::split_tsv(line);
        if (fields.size() != 3) throw ParseError("malformed line (want 3 fields), " + where);
        if (id_of.count(fields[0])) throw ParseError("duplicate node id '" + fields[0] + "', " + where);
        NodeId id = static_cast<NodeId>(g.node_names.size());
        id_of.emplace(fields[0], id);
        g.node_names.push_back(fields[0]);
        auto ti = type_of.find(fields[1]);
        if (ti == type_of.end()) {
            ti = type_of.emplace(fields[1], static_cast<int>(g.type_names.size())).first;
            g.type_names.push_back(fields[1]);
        }
        g.node_type.push_back(ti->second);
        int label = -1;
        if (fields[2] != "-") {
            long v = detail::parse_int(fields[2], where);
            if (v < 0) throw ParseError("negative label, " + where);
            label = static_cast<int>(v);
            if (g.target_type.empty()) g.target_type = fields[1];
            if (fields[1] != g.target_type)
                throw ParseError("label on non-target type '" + fields[1] + "', " + where);
            max_label = std::max(max_label, label);
        }
        g.labels.push_back(label);
    }

    if (num_classes > 0) {
        g.num_classes = num_classes;
        if (max_label >= num_classes)
            throw ParseError("label " + std::to_string(max_label) + " >= num_classes " +
                             std::to_string(num_classes) + " in " + nodes_path);
    } else {
        g.num_classes = std::max(max_label + 1, 2);
    }
    if (!g.target_type.empty()) {
        auto ti = type_of.find(g.target_type);
        if (ti != type_of.end()) g.target_type_id = ti->second;
    }

    std::set<std::string> relation_set;
    struct RawEdge {
        NodeId src, dst;
        std::string rel;
    };
    std::vector<RawEdge> raw;
    std::ifstream edges_in(edges_path);
    if (!edges_in) throw ParseError("cannot open " + edges_path);
    line_no = 0;
    while (std::getline(edges_in, line)) {
        ++line_no;
        if (detail::skip_line(line)) continue;
        auto where = edges_path + ":" + std::to_string(line_no);
        auto fields = detail::split_tsv(line);
        if (fields.size() != 3) throw ParseError("malformed line (want 3 fields), " + where);
        auto si = id_of.find(fields[0]);
        auto di = id_of.find(fields[2]);
        if (si == id_of.end() || di == id_of.end())
            throw ParseError("dangling endpoint, " + where);
        relation_set.insert(fields[1]);
        raw.push_back({si->second, di->second, fields[1]});
    }
    g.relations.assign(relation_set.begin(), relation_set.end());
    g.edges.reserve(raw.size());
    for (const RawEdge& e : raw) {
        g.edges.push_back({e.src, g.relation_index(e.rel), e.dst});
    }
    g.finalize();
    return g;
}

inline void save_graph(const HeteroGraph& g, const std::string& nodes_path,
                       const std::string& edges_path) {
    std::ofstream nodes_out(nodes_path);
    if (!nodes_out) throw InvalidInput("cannot write " + nodes_path);
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
        nodes_out << g.node_names[v] << '\t' << g.type_names[g.node_type[v]] << '\t';
        if (g.is_labeled(v))
            nodes_out << g.labels[v];
        else
            nodes_out << '-';
        nodes_out << '\n';
    }
    std::ofstream edges_out(edges_path);
    if (!edges_out) throw InvalidInput("cannot write " + edges_path);
    for (const Edge& e : g.edges) {
        edges_out << g.node_names[e.src] << '\t' << g.relations[e.rel] << '\t'
                  << g.node_names[e.dst] << '\n';
    }
}

// splits.tsv: node_id<TAB>{train|val|test}; keys must be labeled target nodes.
inline std::unordered_map<NodeId, Split> load_splits(const std::string& path,
                                                     const HeteroGraph& g) {
    std::unordered_map<std::string, NodeId> id_of;
    for (NodeId v = 0; v < g.num_nodes(); ++v) id_of.emplace(g.node_names[v], v);
    std::unordered_map<NodeId, Split> splits;
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::skip_line(line)) continue;
        auto where = path + ":" + std::to_string(line_no);
        auto fields = detail::split_tsv(line);
        if (fields.size() != 2) throw ParseError("malformed line (want 2 fields), " + where);
        auto it = id_of.find(fields[0]);
        if (it == id_of.end()) throw ParseError("unknown node id '" + fields[0] + "', " + where);
        NodeId v = it->second;
        if (!g.is_labeled(v)) throw ParseError("split on unlabeled node '" + fields[0] + "', " + where);
        Split s;
        if (fields[1] == "train")
            s = Split::Train;
        else if (fields[1] == "val")
            s = Split::Val;
        else if (fields[1] == "test")
            s = Split::Test;
        else
            throw ParseError("unknown split '" + fields[1] + "', " + where);
        if (!splits.emplace(v, s).second)
            throw ParseError("duplicate split for node '" + fields[0] + "', " + where);
    }
    return splits;
}

} // namespace hga
