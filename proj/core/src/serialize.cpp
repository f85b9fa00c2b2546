#include "imrl/serialize.hpp"

#include <cstring>
#include <fstream>

#include "imrl/errors.hpp"

namespace imrl::io {

namespace {

const char* activation_name(nn::Activation a) {
    return a == nn::Activation::Relu ? "relu" : "softplus";
}

nn::Activation activation_from_name(const std::string& name) {
    if (name == "relu") return nn::Activation::Relu;
    if (name == "softplus") return nn::Activation::Softplus;
    throw InvalidInput("unknown activation: " + name);
}

void append_u64_le(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

std::uint64_t read_u64_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

} // namespace

std::string checksum_hex(std::span<const unsigned char> bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::vector<unsigned char> pack_doubles_le(std::span<const double> values) {
    std::vector<unsigned char> out;
    out.reserve(values.size() * 8);
    for (double x : values) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, &x, sizeof(bits));
        append_u64_le(out, bits);
    }
    return out;
}

std::vector<double> unpack_doubles_le(std::span<const unsigned char> bytes) {
    if (bytes.size() % 8 != 0) throw InvalidInput("unpack_doubles_le: truncated payload");
    std::vector<double> out(bytes.size() / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::uint64_t bits = read_u64_le(bytes.data() + 8 * i);
        std::memcpy(&out[i], &bits, sizeof(double));
    }
    return out;
}

void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InvalidInput("cannot open for writing: " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw InvalidInput("short write: " + path.string());
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw InvalidInput("cannot open for reading: " + path.string());
    const std::streamsize size = f.tellg();
    f.seekg(0);
    std::vector<unsigned char> bytes(static_cast<std::size_t>(size));
    f.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!f) throw InvalidInput("short read: " + path.string());
    return bytes;
}

NetManifest save_net(const std::filesystem::path& dir, const std::string& name,
                     const nn::DenseNet& net) {
    const std::vector<unsigned char> blob = pack_doubles_le(nn::flatten_params(net));
    NetManifest m;
    m.file = name + ".bin";
    m.layer_sizes = net.sizes;
    m.activation = activation_name(net.hidden_act);
    m.checksum = checksum_hex(blob);
    write_file(dir / m.file, blob);
    return m;
}

nn::DenseNet load_net(const std::filesystem::path& dir, const NetManifest& manifest) {
    const std::vector<unsigned char> blob = read_file(dir / manifest.file);
    if (checksum_hex(blob) != manifest.checksum) {
        throw InvalidInput("checksum mismatch for " + manifest.file);
    }
    nn::DenseNet net = nn::make_net(manifest.layer_sizes, activation_from_name(manifest.activation));
    nn::set_params(net, unpack_doubles_le(blob));
    return net;
}

AdamManifest save_adam(const std::filesystem::path& dir, const std::string& name,
                       const nn::AdamState& state) {
    std::vector<double> flat;
    for (std::size_t l = 0; l < state.mw.size(); ++l) {
        flat.insert(flat.end(), state.mw[l].begin(), state.mw[l].end());
        flat.insert(flat.end(), state.mb[l].begin(), state.mb[l].end());
        flat.insert(flat.end(), state.vw[l].begin(), state.vw[l].end());
        flat.insert(flat.end(), state.vb[l].begin(), state.vb[l].end());
    }
    AdamManifest m;
    m.file = name + ".adam.bin";
    m.step = state.step;
    m.lr = state.lr;
    write_file(dir / m.file, pack_doubles_le(flat));
    return m;
}

nn::AdamState load_adam(const std::filesystem::path& dir, const AdamManifest& manifest,
                        const nn::DenseNet& shape) {
    nn::AdamState state = nn::make_adam(shape, manifest.lr);
    state.step = manifest.step;
    const std::vector<double> flat = unpack_doubles_le(read_file(dir / manifest.file));
    if (flat.size() != 2 * shape.param_count()) {
        throw InvalidInput("adam blob size mismatch for " + manifest.file);
    }
    std::size_t pos = 0;
    auto take = [&](std::vector<double>& dst) {
        std::memcpy(dst.data(), flat.data() + pos, dst.size() * sizeof(double));
        pos += dst.size();
    };
    for (std::size_t l = 0; l < state.mw.size(); ++l) {
        take(state.mw[l]);
        take(state.mb[l]);
        take(state.vw[l]);
        take(state.vb[l]);
    }
    return state;
}

namespace {

void append_state(std::vector<unsigned char>& out, const env::FactoredState& s) {
    append_u64_le(out, s.slots.size());
    for (const auto& slot : s.slots) {
        append_u64_le(out, slot.features.size());
        auto packed = pack_doubles_le(slot.features);
        out.insert(out.end(), packed.begin(), packed.end());
        append_u64_le(out, static_cast<std::uint64_t>(slot.feedback));
        append_u64_le(out, static_cast<std::uint64_t>(slot.recency));
    }
    append_u64_le(out, s.demographic.size());
    auto demo = pack_doubles_le(s.demographic);
    out.insert(out.end(), demo.begin(), demo.end());
    append_u64_le(out, s.interest_obs.size());
    auto obs = pack_doubles_le(s.interest_obs);
    out.insert(out.end(), obs.begin(), obs.end());
}

struct Cursor {
    const unsigned char* p;
    const unsigned char* end;

    std::uint64_t u64() {
        if (p + 8 > end) throw InvalidInput("buffer blob truncated");
        const std::uint64_t v = read_u64_le(p);
        p += 8;
        return v;
    }
    std::vector<double> doubles(std::size_t n) {
        if (p + 8 * n > end) throw InvalidInput("buffer blob truncated");
        std::vector<double> out = unpack_doubles_le(std::span<const unsigned char>(p, 8 * n));
        p += 8 * n;
        return out;
    }
};

env::FactoredState read_state(Cursor& c) {
    env::FactoredState s;
    const std::uint64_t n_slots = c.u64();
    s.slots.resize(n_slots);
    for (auto& slot : s.slots) {
        const std::uint64_t fdim = c.u64();
        slot.features = c.doubles(fdim);
        slot.feedback = static_cast<int>(c.u64());
        slot.recency = static_cast<int>(c.u64());
    }
    s.demographic = c.doubles(c.u64());
    s.interest_obs = c.doubles(c.u64());
    return s;
}

} // namespace

struct BufferIo {
    static void set_total_pushed(agent::ReplayBuffer& b, std::size_t v) { b.total_pushed_ = v; }
};

void save_buffer(const std::filesystem::path& path, const agent::ReplayBuffer& buffer) {
    std::vector<unsigned char> out;
    out.insert(out.end(), {'I', 'M', 'R', 'L', 'B', 'U', 'F', '1'});
    append_u64_le(out, buffer.size());
    append_u64_le(out, buffer.total_pushed());
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        const env::Transition& t = buffer[i];
        append_state(out, t.s);
        append_u64_le(out, t.a.size());
        auto a = pack_doubles_le(t.a);
        out.insert(out.end(), a.begin(), a.end());
        auto r = pack_doubles_le(std::span<const double>(&t.r, 1));
        out.insert(out.end(), r.begin(), r.end());
        append_state(out, t.next);
        append_u64_le(out, t.done ? 1 : 0);
    }
    write_file(path, out);
}

agent::ReplayBuffer load_buffer(const std::filesystem::path& path, std::size_t capacity) {
    const std::vector<unsigned char> bytes = read_file(path);
    if (bytes.size() < 24 || std::memcmp(bytes.data(), "IMRLBUF1", 8) != 0) {
        throw InvalidInput("not a replay buffer blob: " + path.string());
    }
    Cursor c{bytes.data() + 8, bytes.data() + bytes.size()};
    const std::uint64_t count = c.u64();
    const std::uint64_t total = c.u64();
    agent::ReplayBuffer buffer(capacity);
    for (std::uint64_t i = 0; i < count; ++i) {
        env::Transition t;
        t.s = read_state(c);
        t.a = c.doubles(c.u64());
        t.r = c.doubles(1)[0];
        t.next = read_state(c);
        t.done = c.u64() != 0;
        buffer.push(std::move(t));
    }
    BufferIo::set_total_pushed(buffer, total);
    return buffer;
}

} // namespace imrl::io
