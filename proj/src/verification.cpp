/// @file verification.cpp

namespace rotflow {}
