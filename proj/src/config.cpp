/// @file config.cpp

namespace rotflow {}
