// placeholder
namespace msc {}
